//! Closed-loop simulation with storage audit and CSV logging.
//!
//! Each control step runs, in order: observer output, valve flows from the
//! previous step, raw policy gains, gain filter, `α` from the tank, valve
//! assembly, controller commands, contact and disturbance, plant step,
//! observer step, tank update, audit and log.
//!
//! The tank is charged with the energies actually exchanged over the step:
//! the executed command is held while the plant moves, so the work of every
//! port is taken against the RK4 mean twist `ν̄` rather than the twist at the
//! start of the step. This is what keeps the discrete storage balance within
//! the audit tolerance.

use std::io::Write;

use serde::Serialize;

use crate::energy_tank::TankState;
use crate::environment::{cart_step, contact_force, disturbance, CartState, Contact};
use crate::error::Result;
use crate::geometry::{angular, linear, Mat3, Vec6};
use crate::interaction_controller::{
    feedforward, impedance_command, pose_error, Reference, ScaledGains, WrenchTracker,
};
use crate::power_valves::{
    assemble, compute_flows, filter_gains, Policy, PolicyConfig, PowerFlows, SlotGains,
    ValveMatrices, SLOTS,
};
use crate::rigid_body::{self, momentum, InertiaParams, RigidBodyState, Wrench};
use crate::scenario::Scenario;
use crate::wrench_observer::{interaction_estimate, omega3, ObserverState};

pub const LOG_SCHEMA_VERSION: u32 = 1;

/// The tank counts as drained once `α` falls to this value, i.e. the energy
/// sits in the lower half of the smoothing band.
pub const DRAIN_ALPHA: f64 = 0.5;

/// Storage terms of the closed loop (J).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Storage {
    pub kinetic: f64,
    pub spring: f64,
    pub observer: f64,
}

impl Storage {
    /// `H_cl`.
    pub fn total(&self) -> f64 {
        self.kinetic + self.spring + self.observer
    }
}

/// `H_kin = ½νᵀMν`, `H_spr = ½e_linᵀK̄_p,lin·e_lin + ½tr(K̄_p,rot(I − R_dᵀR))`,
/// `H_obs = ½p̂ᵀK_o·p̂`.
///
/// The spring uses the stiffness as executed, `K̄_p = M·M_d⁻¹·K_p`.
pub fn storage(
    state: &RigidBodyState,
    params: &InertiaParams,
    gains: &ScaledGains,
    reference: &Reference,
    observer: &ObserverState,
) -> Storage {
    let e_lin = linear(&pose_error(state, reference));
    let k_lin = gains.stiffness.fixed_view::<3, 3>(3, 3).into_owned();
    let k_rot = gains.stiffness.fixed_view::<3, 3>(0, 0).into_owned();
    let rel = reference.rotation.transpose().compose(&state.rotation);
    let p_hat = observer.momentum_estimate();
    Storage {
        kinetic: rigid_body::kinetic_energy(state, params),
        spring: 0.5 * e_lin.dot(&(k_lin * e_lin))
            + 0.5 * (k_rot * (Mat3::identity() - rel.matrix())).trace(),
        observer: 0.5 * p_hat.dot(&p_hat.component_mul(observer.gain())),
    }
}

/// `(H̄(t+h) − H̄(t))/h − port_power`; non-positive for a passive step.
pub fn audit_step(before: f64, after: f64, port_power: f64, h: f64) -> f64 {
    (after - before) / h - port_power
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    /// Speed or rate threshold exceeded, or the plant state became non-finite.
    Diverged,
    TankUnderflow,
}

/// One control step: the state at `t` and everything computed from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub t: f64,
    pub vehicle: RigidBodyState,
    pub cart: CartState,
    pub estimate: Wrench,
    pub external: Wrench,
    pub contact_force: f64,
    pub impedance_command: Wrench,
    pub tracking_command: Wrench,
    /// Instantaneous unscaled flows at `t`; the policy sees them on the next step.
    pub flows: PowerFlows,
    /// Valve-scaled port energies over the step divided by `h` (W).
    pub scaled_flows: [f64; 3],
    pub raw_gains: SlotGains,
    pub filtered_gains: SlotGains,
    pub alpha: f64,
    pub beta: f64,
    pub tank_energy: f64,
    pub storage: Storage,
    /// `H_cl + H_t`, or `H_cl` without a tank.
    pub total_storage: f64,
    /// Audit residual over `[t, t + h]` (W).
    pub residual: f64,
    /// Storage the continuous-time balance loses over the step: damping and
    /// observer dissipation minus what the tank admits (W). The residual minus
    /// its negative is the discretization error.
    pub dissipation: f64,
}

/// Column names of the CSV log, SI units throughout.
#[rustfmt::skip]
pub const LOG_COLUMNS: [&str; 72] = [
    "t",
    "x", "y", "z",
    "rot_x", "rot_y", "rot_z",
    "omega_x", "omega_y", "omega_z", "v_x", "v_y", "v_z",
    "cart_s", "cart_v",
    "est_tx", "est_ty", "est_tz", "est_fx", "est_fy", "est_fz",
    "ext_tx", "ext_ty", "ext_tz", "ext_fx", "ext_fy", "ext_fz",
    "contact_force",
    "imp_tx", "imp_ty", "imp_tz", "imp_fx", "imp_fy", "imp_fz",
    "trk_tx", "trk_ty", "trk_tz", "trk_fx", "trk_fy", "trk_fz",
    "d1", "d2", "p1", "p2", "p3", "p2_lin", "p2_ang", "p3_lin", "p3_ang",
    "p1_scaled", "p2_scaled", "p3_scaled",
    "gamma_raw_1", "gamma_raw_2", "gamma_raw_3", "gamma_raw_4", "gamma_raw_5",
    "gamma_1", "gamma_2", "gamma_3", "gamma_4", "gamma_5",
    "alpha", "beta",
    "tank_energy",
    "h_kin", "h_spr", "h_obs", "h_cl", "h_total",
    "residual", "dissipation",
];

impl StepLog {
    pub fn values(&self) -> Vec<f64> {
        let s = &self.vehicle;
        let f = &self.flows;
        let mut v = Vec::with_capacity(LOG_COLUMNS.len());
        v.push(self.t);
        v.extend(s.position.iter());
        v.extend(s.rotation.log().iter());
        v.extend(s.twist.iter());
        v.extend([self.cart.position, self.cart.velocity]);
        v.extend(self.estimate.0.iter());
        v.extend(self.external.0.iter());
        v.push(self.contact_force);
        v.extend(self.impedance_command.0.iter());
        v.extend(self.tracking_command.0.iter());
        v.extend([
            f.d1, f.d2, f.p1, f.p2, f.p3, f.p2_lin, f.p2_ang, f.p3_lin, f.p3_ang,
        ]);
        v.extend(self.scaled_flows);
        v.extend(self.raw_gains);
        v.extend(self.filtered_gains);
        v.extend([self.alpha, self.beta, self.tank_energy]);
        let st = &self.storage;
        v.extend([
            st.kinetic,
            st.spring,
            st.observer,
            st.total(),
            self.total_storage,
        ]);
        v.extend([self.residual, self.dissipation]);
        v
    }
}

pub fn write_csv<W: Write>(log: &[StepLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LOG_COLUMNS)?;
    for row in log {
        w.write_record(row.values().iter().map(|x| x.to_string()))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub policy: Policy,
    pub termination: Termination,
    pub tank_attached: bool,
    pub seed: u64,
    pub log_schema_version: u32,
    pub steps: usize,
    /// s
    pub final_time: f64,
    /// m
    pub cart_distance: f64,
    /// First time `α ≤ DRAIN_ALPHA` (s).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tank_drain_time: Option<f64>,
    /// J
    pub final_tank_energy: f64,
    /// m/s
    pub max_linear_speed: f64,
    /// rad/s
    pub max_angular_speed: f64,
    /// W
    pub audit_tolerance: f64,
    pub audit_pass_rate: f64,
    pub audit_violations: usize,
    /// W
    pub audit_max_residual: f64,
}

impl Summary {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub log: Vec<StepLog>,
    pub summary: Summary,
}

/// Stepwise closed-loop simulation of one scenario.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    params: InertiaParams,
    gains: ScaledGains,
    reference: Reference,
    policy: PolicyConfig,
    tracker: WrenchTracker,
    state: RigidBodyState,
    cart: CartState,
    observer: ObserverState,
    tank: Option<TankState>,
    filtered: SlotGains,
    previous_flows: PowerFlows,
    previous_external: Wrench,
    step: usize,
    termination: Option<Termination>,
}

impl Simulation {
    /// Validates the scenario and sets up the initial state. The tank is
    /// attached for every policy except [`Policy::None`].
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        let params = scenario.inertia()?;
        let gains = scenario.impedance_gains()?.scaled(&params);
        let state = scenario.initial_state();
        let observer = ObserverState::new(
            Vec6::from(scenario.observer.gain),
            momentum(&state, &params),
        )?;
        let tank = match scenario.sim.policy {
            Policy::None => None,
            _ => Some(TankState::new(scenario.tank_config())?),
        };
        Ok(Self {
            params,
            gains,
            reference: scenario.reference(),
            policy: scenario.policy_config(),
            tracker: scenario.tracker()?,
            state,
            cart: CartState::at(scenario.environment.cart_position),
            observer,
            tank,
            filtered: [1.0; SLOTS],
            previous_flows: PowerFlows::default(),
            previous_external: Wrench::zero(),
            step: 0,
            termination: None,
            scenario: scenario.clone(),
        })
    }

    pub fn state(&self) -> &RigidBodyState {
        &self.state
    }

    pub fn cart(&self) -> &CartState {
        &self.cart
    }

    pub fn tank(&self) -> Option<&TankState> {
        self.tank.as_ref()
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.scenario.sim.dt
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn is_finished(&self) -> bool {
        self.termination.is_some() || self.step >= self.scenario.steps()
    }

    /// Advances one control step; returns `None` once the run has ended.
    pub fn advance(&mut self) -> Option<StepLog> {
        if self.is_finished() {
            return None;
        }
        let sc = &self.scenario;
        let h = sc.sim.dt;
        let t = self.time();
        let s = self.state;
        let params = &self.params;

        let estimate = if sc.observer.ground_truth {
            self.previous_external
        } else {
            self.observer.estimate()
        };
        let raw_gains = self.policy.raw_gains(&self.previous_flows);
        let filtered = filter_gains(&raw_gains, &self.filtered, self.policy.cutoff_hz, h);
        let (alpha, beta) = self.tank.map_or((1.0, 1.0), |tk| (tk.alpha(), tk.beta()));
        let valves = assemble(&filtered, alpha);

        let impedance = impedance_command(
            &s,
            params,
            &self.gains,
            &self.reference,
            &estimate,
            &valves.gamma2,
        );
        let raw_tracking = if t >= sc.reference.tracking_start {
            self.tracker.update(
                &interaction_estimate(&estimate),
                &self.reference.interaction_wrench,
                h,
            )
        } else {
            Wrench::zero()
        };
        let tracking = raw_tracking.scaled(&valves.gamma1);
        let command = impedance + tracking;
        let ff = feedforward(&self.gains, &estimate);
        let flows = compute_flows(
            &s.twist,
            &self.gains.damping,
            &self.observer.port_output(),
            &raw_tracking.scaled(&ValveMatrices::open().gamma1),
            &ff,
            &omega3(&s, params, &command, self.observer.gain()),
        );

        let contact = if sc.environment.enabled {
            contact_force(&s, &self.cart, &sc.environment.contact)
        } else {
            Contact::default()
        };
        let external = contact.wrench + disturbance(t, &sc.disturbances);

        let before = storage(&s, params, &self.gains, &self.reference, &self.observer);
        let tank_before = self.tank.map_or(0.0, |tk| tk.energy());
        let mut row = StepLog {
            t,
            vehicle: s,
            cart: self.cart,
            estimate,
            external,
            contact_force: contact.force,
            impedance_command: impedance,
            tracking_command: tracking,
            flows,
            scaled_flows: [0.0; 3],
            raw_gains,
            filtered_gains: filtered,
            alpha,
            beta,
            tank_energy: tank_before,
            storage: before,
            total_storage: before.total() + tank_before,
            residual: f64::NAN,
            dissipation: f64::NAN,
        };

        self.step += 1;
        self.filtered = filtered;
        self.previous_flows = flows;
        self.previous_external = external;

        let outcome = match rigid_body::integrate(&s, params, &command, &external, h) {
            Ok(o) => o,
            Err(_) => {
                self.termination = Some(Termination::Diverged);
                return Some(row);
            }
        };
        self.cart = cart_step(&self.cart, &sc.environment.cart, contact.force, h);
        let (observer, obs_power) =
            self.observer
                .step(&s, &outcome.state, params, &command, &valves.gamma3, h);

        let nu_bar = outcome.mean_twist;
        row.scaled_flows = [
            nu_bar.dot(&tracking.0),
            nu_bar.dot(&ff.scaled(&valves.gamma2).0),
            obs_power.port,
        ];
        let d1 = nu_bar.dot(&(self.gains.damping * s.twist));
        row.dissipation = d1 + obs_power.dissipation;
        if let Some(tank) = self.tank {
            match tank.step(d1, obs_power.dissipation, row.scaled_flows, h) {
                Ok(update) => {
                    self.tank = Some(update.state);
                    row.dissipation -= update.inflow - update.clamped / h;
                }
                Err(_) => {
                    self.termination = Some(Termination::TankUnderflow);
                    return Some(row);
                }
            }
        }

        self.state = outcome.state;
        self.observer = observer;
        let after = storage(
            &self.state,
            params,
            &self.gains,
            &self.reference,
            &self.observer,
        );
        let total_after = after.total() + self.tank.map_or(0.0, |tk| tk.energy());
        row.residual = audit_step(row.total_storage, total_after, external.0.dot(&nu_bar), h);

        if linear(&self.state.twist).norm() > sc.sim.max_speed
            || angular(&self.state.twist).norm() > sc.sim.max_rate
        {
            self.termination = Some(Termination::Diverged);
        }
        Some(row)
    }

    /// Runs to the end of the scenario.
    pub fn run(mut self) -> RunOutput {
        let mut log = Vec::with_capacity(self.scenario.steps());
        while let Some(row) = self.advance() {
            log.push(row);
        }
        let summary = self.summarize(&log);
        RunOutput { log, summary }
    }

    fn summarize(&self, log: &[StepLog]) -> Summary {
        let sc = &self.scenario;
        let tol = sc.sim.audit_tolerance;
        let passes = log.iter().filter(|r| r.residual <= tol).count();
        let speeds = log
            .iter()
            .map(|r| r.vehicle.twist)
            .chain([self.state.twist]);
        let (max_v, max_w) = speeds.fold((0.0f64, 0.0f64), |(v, w), tw| {
            (v.max(linear(&tw).norm()), w.max(angular(&tw).norm()))
        });
        Summary {
            scenario: sc.name.clone(),
            policy: sc.sim.policy,
            termination: self.termination.unwrap_or(Termination::Completed),
            tank_attached: self.tank.is_some(),
            seed: sc.sim.seed,
            log_schema_version: LOG_SCHEMA_VERSION,
            steps: log.len(),
            final_time: self.time(),
            cart_distance: self.cart.position - sc.environment.cart_position,
            tank_drain_time: self
                .tank
                .and_then(|_| log.iter().find(|r| r.alpha <= DRAIN_ALPHA).map(|r| r.t)),
            final_tank_energy: self.tank.map_or(f64::NAN, |tk| tk.energy()),
            max_linear_speed: max_v,
            max_angular_speed: max_w,
            audit_tolerance: tol,
            audit_pass_rate: if log.is_empty() {
                1.0
            } else {
                passes as f64 / log.len() as f64
            },
            audit_violations: log.len() - passes,
            audit_max_residual: log
                .iter()
                .map(|r| r.residual)
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Validates and runs `scenario` to completion.
pub fn run(scenario: &Scenario) -> Result<RunOutput> {
    Ok(Simulation::new(scenario)?.run())
}
