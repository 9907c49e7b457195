//! Momentum-based estimator of the total external wrench.
//!
//! The estimate is `ŵ_ext = K_o·(p − p̂)` where `p = M·ν` is the plant
//! momentum and `p̂` integrates the valve-scaled model
//! `ṗ̂ = Γ₃·ω₃ − K_o·p̂` with `ω₃ = C·ν + w_g + w_c + K_o·p`. With `Γ₃ = I`
//! the estimation error obeys `ẇ̂_ext = K_o·(w_ext − ŵ_ext)`.

use crate::error::{Error, Result};
use crate::geometry::Vec6;
use crate::rigid_body::{
    coriolis_matrix, gravity_wrench, momentum, InertiaParams, RigidBodyState, Wrench,
};

/// Observer state: estimated momentum and diagonal gain `K_o` (1/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverState {
    momentum_estimate: Vec6,
    gain: Vec6,
    estimate: Wrench,
}

/// Average powers over one observer step, for tank bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObserverPortPower {
    /// Mean of `(K_o·p̂)ᵀ·Γ₃·ω₃` over the step (W).
    pub port: f64,
    /// Mean of `p̂ᵀ·K_oᵀ·K_o·p̂` over the step (W).
    pub dissipation: f64,
}

impl ObserverState {
    /// Starts with `p̂ = momentum` so that the initial estimate is zero.
    pub fn new(gain: Vec6, momentum: Vec6) -> Result<Self> {
        if gain.iter().any(|&k| !(k > 0.0 && k.is_finite())) {
            return Err(Error::validation(format!(
                "observer gain entries must be positive, got {:?}",
                gain.as_slice()
            )));
        }
        Ok(Self {
            momentum_estimate: momentum,
            gain,
            estimate: Wrench::zero(),
        })
    }

    pub fn with_momentum_estimate(mut self, p_hat: Vec6, momentum: &Vec6) -> Self {
        self.momentum_estimate = p_hat;
        self.estimate = self.output(momentum);
        self
    }

    pub fn gain(&self) -> &Vec6 {
        &self.gain
    }

    pub fn momentum_estimate(&self) -> &Vec6 {
        &self.momentum_estimate
    }

    /// Last estimate `ŵ_ext` computed by [`ObserverState::step`].
    pub fn estimate(&self) -> Wrench {
        self.estimate
    }

    /// `K_o·(p − p̂)`.
    pub fn output(&self, momentum: &Vec6) -> Wrench {
        Wrench((momentum - self.momentum_estimate).component_mul(&self.gain))
    }

    /// `y₃ = K_o·p̂`, the output of the observer power port.
    pub fn port_output(&self) -> Vec6 {
        self.momentum_estimate.component_mul(&self.gain)
    }

    /// `d₂ = p̂ᵀ·K_oᵀ·K_o·p̂`.
    pub fn dissipation(&self) -> f64 {
        self.port_output().norm_squared()
    }

    /// Integrates one step of length `h`.
    ///
    /// `before` and `after` are the plant states at the ends of the step; the
    /// forcing `Γ₃·ω₃` is interpolated linearly between them while `command`
    /// is held. Passing the same state twice holds `ν` constant as well. The
    /// new estimate uses the momentum of `after`.
    pub fn step(
        &self,
        before: &RigidBodyState,
        after: &RigidBodyState,
        params: &InertiaParams,
        command: &Wrench,
        gamma3: &Vec6,
        h: f64,
    ) -> (ObserverState, ObserverPortPower) {
        let k = &self.gain;
        let u0 = omega3(before, params, command, k).component_mul(gamma3);
        let u1 = omega3(after, params, command, k).component_mul(gamma3);
        let um = (u0 + u1) * 0.5;
        let f = |u: &Vec6, p: &Vec6| u - p.component_mul(k);

        let p0 = self.momentum_estimate;
        let k1 = f(&u0, &p0);
        let k2 = f(&um, &(p0 + k1 * (h / 2.0)));
        let k3 = f(&um, &(p0 + k2 * (h / 2.0)));
        let k4 = f(&u1, &(p0 + k3 * h));
        let p1 = p0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);

        // Simpson over the step with a cubic-Hermite midpoint.
        let pm = (p0 + p1) * 0.5 + (f(&u0, &p0) - f(&u1, &p1)) * (h / 8.0);
        let y = |p: &Vec6| p.component_mul(k);
        let simpson = |a: f64, m: f64, b: f64| (a + 4.0 * m + b) / 6.0;
        let power = ObserverPortPower {
            port: simpson(y(&p0).dot(&u0), y(&pm).dot(&um), y(&p1).dot(&u1)),
            dissipation: simpson(
                y(&p0).norm_squared(),
                y(&pm).norm_squared(),
                y(&p1).norm_squared(),
            ),
        };

        let mut next = Self {
            momentum_estimate: p1,
            gain: self.gain,
            estimate: Wrench::zero(),
        };
        next.estimate = next.output(&momentum(after, params));
        (next, power)
    }
}

/// `ω₃ = C·ν + w_g + w_c + K_o·p`, the input of the observer power port.
pub fn omega3(
    state: &RigidBodyState,
    params: &InertiaParams,
    command: &Wrench,
    gain: &Vec6,
) -> Vec6 {
    coriolis_matrix(params, &state.angular_velocity()) * state.twist
        + gravity_wrench(params, &state.rotation).0
        + command.0
        + momentum(state, params).component_mul(gain)
}

/// Estimated interaction wrench: the external force estimate with zero torque.
pub fn interaction_estimate(estimate: &Wrench) -> Wrench {
    let mut w = *estimate;
    w.0.fixed_rows_mut::<3>(0).fill(0.0);
    w
}
