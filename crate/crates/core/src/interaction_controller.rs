//! Axis-selective impedance control and PI wrench tracking.
//!
//! The impedance law with valve scaling is
//!
//! ```text
//! w_c,imp* = Γ₂·M̄·ŵ_ext − K̄_d·ν − K̄_p·e − C·ν − w_g
//! ```
//!
//! with `K̄_d = M·M_d⁻¹·K_d`, `K̄_p = M·M_d⁻¹·K_p` and `M̄ = M·M_d⁻¹ − I`.
//! Assuming a perfect estimate it yields the closed loop
//! `M_d·ν̇ = −K_d·ν − K_p·e + w_ext`.
//!
//! The pose error is `e = [½·vee(R_dᵀR − RᵀR_d); Rᵀ(p − p_d)]`. The linear
//! part is taken in the body frame, where the commanded wrench acts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rotation_error, stack, Mat6, Rotation, Vec3, Vec6};
use crate::rigid_body::{coriolis_matrix, gravity_wrench, InertiaParams, RigidBodyState, Wrench};

/// Desired inertia, stiffness and damping of the impedance controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceGains {
    pub desired_inertia: Mat6,
    pub stiffness: Mat6,
    pub damping: Mat6,
}

impl ImpedanceGains {
    pub fn new(desired_inertia: Mat6, stiffness: Mat6, damping: Mat6) -> Result<Self> {
        for (name, m) in [
            ("desired inertia", &desired_inertia),
            ("stiffness", &stiffness),
            ("damping", &damping),
        ] {
            if !is_spd(m) {
                return Err(Error::validation(format!(
                    "{name} must be symmetric positive definite"
                )));
            }
        }
        Ok(Self {
            desired_inertia,
            stiffness,
            damping,
        })
    }

    /// `M_d = M`, `K_p = blkdiag(25·I, 180·I)`, `K_d = blkdiag(8·I, 60·I)`.
    pub fn default_for(params: &InertiaParams) -> Self {
        Self {
            desired_inertia: params.generalized(),
            stiffness: Mat6::from_diagonal(&Vec6::new(25.0, 25.0, 25.0, 180.0, 180.0, 180.0)),
            damping: Mat6::from_diagonal(&Vec6::new(8.0, 8.0, 8.0, 60.0, 60.0, 60.0)),
        }
    }

    /// Gains premultiplied by `M·M_d⁻¹`.
    pub fn scaled(&self, params: &InertiaParams) -> ScaledGains {
        let ratio = params.generalized()
            * self
                .desired_inertia
                .try_inverse()
                .expect("positive-definite desired inertia is invertible");
        ScaledGains {
            stiffness: ratio * self.stiffness,
            damping: ratio * self.damping,
            feedforward: ratio - Mat6::identity(),
        }
    }
}

pub(crate) fn is_spd(m: &Mat6) -> bool {
    m.iter().all(|x| x.is_finite())
        && (m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0)
        && m.cholesky().is_some()
}

/// `K̄_p`, `K̄_d` and `M̄`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledGains {
    pub stiffness: Mat6,
    pub damping: Mat6,
    pub feedforward: Mat6,
}

/// Constant pose set-point and desired interaction wrench.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Reference {
    pub rotation: Rotation,
    pub position: Vec3,
    pub interaction_wrench: Wrench,
}

pub fn pose_error(state: &RigidBodyState, reference: &Reference) -> Vec6 {
    let e_rot = rotation_error(&state.rotation, &reference.rotation);
    let e_lin = state
        .rotation
        .inverse_rotate(&(state.position - reference.position));
    stack(&e_rot, &e_lin)
}

/// `M̄·ŵ_ext`, the unscaled input of the impedance power port.
pub fn feedforward(gains: &ScaledGains, estimate: &Wrench) -> Wrench {
    Wrench(gains.feedforward * estimate.0)
}

pub fn impedance_command(
    state: &RigidBodyState,
    params: &InertiaParams,
    gains: &ScaledGains,
    reference: &Reference,
    estimate: &Wrench,
    gamma2: &Vec6,
) -> Wrench {
    let e = pose_error(state, reference);
    let nu = &state.twist;
    let ff = feedforward(gains, estimate).scaled(gamma2);
    let c = coriolis_matrix(params, &state.angular_velocity());
    ff - Wrench(gains.damping * nu + gains.stiffness * e + c * nu)
        - gravity_wrench(params, &state.rotation)
}

/// Which sign the tracking error carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSign {
    /// `w_int,e = ŵ_int − w_int,d`.
    #[default]
    EstimateMinusReference,
    /// `w_int,e = w_int,d − ŵ_int`.
    ReferenceMinusEstimate,
}

/// PI wrench-tracking controller with a clamped integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrenchTracker {
    pub proportional: Vec6,
    pub integral_gain: Vec6,
    /// Per-axis bound on the integral term `K_i,tr·∫w_int,e dt` (N).
    pub anti_windup: f64,
    pub sign: ErrorSign,
    integral: Vec6,
}

impl Default for WrenchTracker {
    fn default() -> Self {
        Self::new(
            Vec6::repeat(0.5),
            Vec6::repeat(1.5),
            20.0,
            ErrorSign::default(),
        )
        .expect("default tracking gains are valid")
    }
}

impl WrenchTracker {
    pub fn new(
        proportional: Vec6,
        integral_gain: Vec6,
        anti_windup: f64,
        sign: ErrorSign,
    ) -> Result<Self> {
        if proportional
            .iter()
            .chain(integral_gain.iter())
            .any(|&g| !(g >= 0.0 && g.is_finite()))
        {
            return Err(Error::validation("tracking gains must be non-negative"));
        }
        if !(anti_windup > 0.0) {
            return Err(Error::validation("anti-windup bound must be positive"));
        }
        Ok(Self {
            proportional,
            integral_gain,
            anti_windup,
            sign,
            integral: Vec6::zeros(),
        })
    }

    pub fn integral(&self) -> &Vec6 {
        &self.integral
    }

    pub fn reset(&mut self) {
        self.integral = Vec6::zeros();
    }

    /// Advances the integral by `h` and returns the unscaled PI command.
    pub fn update(&mut self, estimate: &Wrench, desired: &Wrench, h: f64) -> Wrench {
        let error = match self.sign {
            ErrorSign::EstimateMinusReference => estimate.0 - desired.0,
            ErrorSign::ReferenceMinusEstimate => desired.0 - estimate.0,
        };
        let next = self.integral + error * h;
        self.integral = Vec6::from_fn(|i, _| {
            let k = self.integral_gain[i];
            if k > 0.0 {
                let bound = self.anti_windup / k;
                next[i].clamp(-bound, bound)
            } else {
                next[i]
            }
        });
        Wrench(
            error.component_mul(&self.proportional)
                + self.integral.component_mul(&self.integral_gain),
        )
    }
}

/// `Γ₁·(K_p,tr·w_int,e + K_i,tr·∫w_int,e dt)`.
pub fn tracking_command(
    tracker: &mut WrenchTracker,
    estimate: &Wrench,
    desired: &Wrench,
    gamma1: &Vec6,
    h: f64,
) -> Wrench {
    tracker.update(estimate, desired, h).scaled(gamma1)
}

pub fn total_command(impedance: &Wrench, tracking: &Wrench) -> Wrench {
    *impedance + *tracking
}
