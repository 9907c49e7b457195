//! Movable cart, ground obstacle, penalty contact and scripted disturbances.
//!
//! The cart moves along inertial x; `position` is the x coordinate of the
//! face the end-effector pushes on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::rigid_body::{RigidBodyState, Wrench};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CartParams {
    /// kg
    pub mass: f64,
    /// Coulomb friction level (N).
    pub coulomb: f64,
    /// Viscous coefficient (N·s/m).
    pub viscous: f64,
    /// Start of the obstacle zone (m).
    pub obstacle_position: f64,
    /// Extra resistance inside the zone (N).
    pub obstacle_force: f64,
    /// Length of the zone (m).
    pub obstacle_width: f64,
}

impl Default for CartParams {
    fn default() -> Self {
        Self {
            mass: 10.0,
            coulomb: 4.0,
            viscous: 2.0,
            obstacle_position: f64::INFINITY,
            obstacle_force: 15.0,
            obstacle_width: 0.05,
        }
    }
}

impl CartParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::validation(format!(
                "cart mass must be positive, got {}",
                self.mass
            )));
        }
        for (name, v) in [
            ("coulomb friction", self.coulomb),
            ("viscous friction", self.viscous),
            ("obstacle force", self.obstacle_force),
            ("obstacle width", self.obstacle_width),
        ] {
            if !(v >= 0.0) {
                return Err(Error::validation(format!(
                    "cart {name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn in_obstacle(&self, s: f64) -> bool {
        s >= self.obstacle_position && s <= self.obstacle_position + self.obstacle_width
    }

    /// Resistance level opposing motion at position `s` (N).
    pub fn resistance(&self, s: f64) -> f64 {
        self.coulomb
            + if self.in_obstacle(s) {
                self.obstacle_force
            } else {
                0.0
            }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CartState {
    pub position: f64,
    pub velocity: f64,
}

impl CartState {
    pub fn at(position: f64) -> Self {
        Self {
            position,
            velocity: 0.0,
        }
    }

    pub fn kinetic_energy(&self, params: &CartParams) -> f64 {
        0.5 * params.mass * self.velocity * self.velocity
    }
}

/// Semi-implicit Euler step under `applied` force along +x.
///
/// At rest the cart sticks while `|applied|` does not exceed the local
/// resistance; a velocity that would cross zero under friction is snapped to
/// zero.
pub fn cart_step(cart: &CartState, params: &CartParams, applied: f64, h: f64) -> CartState {
    let resistance = params.resistance(cart.position);
    let v = cart.velocity;
    let velocity = if v == 0.0 {
        if applied.abs() <= resistance {
            0.0
        } else {
            let a = (applied - resistance * applied.signum()) / params.mass;
            v + h * a
        }
    } else {
        let a = (applied - resistance * v.signum() - params.viscous * v) / params.mass;
        let next = v + h * a;
        if next.signum() != v.signum() {
            0.0
        } else {
            next
        }
    };
    CartState {
        position: cart.position + h * velocity,
        velocity,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContactModel {
    /// End-effector offset in the body frame (m).
    pub offset: [f64; 3],
    /// N/m
    pub stiffness: f64,
    /// N·s/m
    pub damping: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        Self {
            offset: [0.3, 0.0, 0.0],
            stiffness: 5000.0,
            damping: 50.0,
        }
    }
}

impl ContactModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.stiffness > 0.0 && self.damping > 0.0) {
            return Err(Error::validation(
                "contact stiffness and damping must be positive",
            ));
        }
        if self.offset.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("end-effector offset must be finite"));
        }
        Ok(())
    }

    pub fn offset(&self) -> Vec3 {
        Vec3::from(self.offset)
    }
}

/// End-effector inertial x position and velocity.
pub fn end_effector_x(state: &RigidBodyState, model: &ContactModel) -> (f64, f64) {
    let r = model.offset();
    let x = state.position.x + state.rotation.rotate(&r).x;
    let v = state
        .rotation
        .rotate(&(state.linear_velocity() + state.angular_velocity().cross(&r)));
    (x, v.x)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Contact {
    /// Force pushing the cart along +x (N, never negative).
    pub force: f64,
    /// Penetration of the end-effector into the cart face (m).
    pub penetration: f64,
    /// Reaction on the vehicle in the body frame.
    pub wrench: Wrench,
}

pub fn contact_force(state: &RigidBodyState, cart: &CartState, model: &ContactModel) -> Contact {
    let (x_ee, v_ee) = end_effector_x(state, model);
    let penetration = x_ee - cart.position;
    if penetration <= 0.0 {
        return Contact {
            penetration,
            ..Default::default()
        };
    }
    let rate = v_ee - cart.velocity;
    let force = (model.stiffness * penetration + model.damping * rate).max(0.0);
    let f_body = state.rotation.inverse_rotate(&Vec3::new(-force, 0.0, 0.0));
    Contact {
        force,
        penetration,
        wrench: Wrench::from_parts(&model.offset().cross(&f_body), &f_body),
    }
}

/// Piecewise-constant body-frame wrench active on `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Pulse {
    pub start: f64,
    pub end: f64,
    /// `[torque; force]`
    pub wrench: [f64; 6],
}

/// Validates the schedule: well-formed, sorted-independent, non-overlapping.
pub fn validate_schedule(pulses: &[Pulse]) -> Result<()> {
    for p in pulses {
        if !(p.start >= 0.0 && p.end > p.start) {
            return Err(Error::validation(format!(
                "disturbance pulse needs 0 ≤ start < end, got [{}, {}]",
                p.start, p.end
            )));
        }
        if p.wrench.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("disturbance wrench must be finite"));
        }
    }
    let mut sorted: Vec<&Pulse> = pulses.iter().collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(Error::validation(format!(
                "disturbance pulses [{}, {}] and [{}, {}] overlap",
                pair[0].start, pair[0].end, pair[1].start, pair[1].end
            )));
        }
    }
    Ok(())
}

pub fn disturbance(t: f64, pulses: &[Pulse]) -> Wrench {
    pulses
        .iter()
        .find(|p| t >= p.start && t < p.end)
        .map(|p| Wrench(p.wrench.into()))
        .unwrap_or_default()
}
