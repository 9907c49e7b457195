//! Passivity-based interaction control for a fully actuated aerial vehicle.
//!
//! The closed loop couples an impedance controller with a momentum-based
//! wrench observer and an explicit wrench tracker. Every power port that may
//! inject energy is routed through a scalar valve; valve openings are chosen
//! by a power-allocation policy and backed by a virtual energy tank, so the
//! loop stays passive with respect to the environment.
//!
//! Module map:
//!
//! - [`geometry`]: SO(3)/SE(3) helpers, `skew`, `vee`, exponential map.
//! - [`rigid_body`]: body-frame dynamics and a Lie-group RK4 step.
//! - [`wrench_observer`]: momentum observer and its power port.
//! - [`interaction_controller`]: impedance law and wrench tracker.
//! - [`energy_tank`]: tank storage, `α`/`β` gates, bounds.
//! - [`power_valves`]: power flows and the IGS, WGS and SGA policies.
//! - [`environment`]: cart with friction and obstacle, penalty contact.
//! - [`scenario`]: TOML scenarios, bundled presets, overrides.
//! - [`simulator`]: the control loop, passivity audit, CSV log, summary.
//! - [`cli`]: the `passim` command line.
//!
//! The `examples/` directory has one runnable program per capability:
//! `hover_regulation`, `observer_step`, `energy_tank`, `valve_policies`,
//! `cart_push`, `obstacle_comparison`, `passivity_audit` and
//! `scenario_overrides`.

// Range checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod energy_tank;
pub mod environment;
pub mod error;
pub mod geometry;
pub mod interaction_controller;
pub mod power_valves;
pub mod rigid_body;
pub mod scenario;
pub mod simulator;
pub mod wrench_observer;

pub use error::{Error, Result};
