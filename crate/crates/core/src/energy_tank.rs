//! Virtual energy tank.
//!
//! The tank state `x_t` stores `H_t = ½·x_t²`. It is filled by a fraction of
//! the damping power and drained by the (valve-scaled) passivity-violating
//! flows:
//!
//! ```text
//! Ḣ_t = β·(η₁·d₁ + η₂·d₂) − Σ p*_i
//! ```
//!
//! The energy is integrated directly, which avoids the `1/x_t` singularity
//! of the state equation near an empty tank.

use crate::error::{Error, Result};

/// Largest energy the lower clamp may absorb in one step before the update
/// is reported as an underflow (J).
pub const MAX_CLAMP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankConfig {
    pub initial_energy: f64,
    /// `H_t⁻` (J).
    pub lower: f64,
    /// `H_t⁺` (J).
    pub upper: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Width `ε_t` of the cosine band above `H_t⁻` (J).
    pub smoothing: f64,
}

impl Default for TankConfig {
    fn default() -> Self {
        Self {
            initial_energy: 5.0,
            lower: 0.2,
            upper: 10.0,
            eta1: 0.4,
            eta2: 0.4,
            smoothing: 0.5,
        }
    }
}

impl TankConfig {
    pub fn validate(&self) -> Result<()> {
        let c = self;
        if !(c.lower > 0.0 && c.lower < c.upper) {
            return Err(Error::validation(format!(
                "tank bounds must satisfy 0 < lower < upper, got lower = {}, upper = {}",
                c.lower, c.upper
            )));
        }
        if !(c.initial_energy >= c.lower && c.initial_energy <= c.upper) {
            return Err(Error::validation(format!(
                "initial tank energy {} outside [{}, {}]",
                c.initial_energy, c.lower, c.upper
            )));
        }
        for (name, eta) in [("eta1", c.eta1), ("eta2", c.eta2)] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::validation(format!(
                    "{name} must lie in [0, 1], got {eta}"
                )));
            }
        }
        if !(c.smoothing > 0.0) {
            return Err(Error::validation("tank smoothing width must be positive"));
        }
        Ok(())
    }
}

/// `1` while `energy ≤ upper`, else `0`.
pub fn beta(energy: f64, upper: f64) -> f64 {
    if energy <= upper {
        1.0
    } else {
        0.0
    }
}

/// Cosine step from 0 at `lower` to 1 at `lower + smoothing`.
pub fn alpha(energy: f64, lower: f64, smoothing: f64) -> f64 {
    if energy <= lower {
        0.0
    } else if energy <= lower + smoothing {
        0.5 * (1.0 - (std::f64::consts::PI * (energy - lower) / smoothing).cos())
    } else {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankState {
    energy: f64,
    config: TankConfig,
}

/// Bookkeeping of one tank update; powers are averages over the step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TankUpdate {
    pub state: TankState,
    /// Admitted inflow `β·(η₁d₁ + η₂d₂)` after the upper clamp (W).
    pub inflow: f64,
    /// `Σ p*_i` (W).
    pub outflow: f64,
    /// Energy added by the lower clamp (J).
    pub clamped: f64,
}

impl TankState {
    pub fn new(config: TankConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            energy: config.initial_energy,
            config,
        })
    }

    pub fn config(&self) -> &TankConfig {
        &self.config
    }

    /// `H_t` (J).
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// `x_t = √(2·H_t)`.
    pub fn state(&self) -> f64 {
        (2.0 * self.energy).sqrt()
    }

    pub fn beta(&self) -> f64 {
        beta(self.energy, self.config.upper)
    }

    pub fn alpha(&self) -> f64 {
        alpha(self.energy, self.config.lower, self.config.smoothing)
    }

    /// Advances the tank by `h` seconds.
    ///
    /// The inflow is cut where it would push the energy past `H_t⁺`; the
    /// energy is clamped at `H_t⁻` from below, and a clamp larger than
    /// [`MAX_CLAMP`] is an error.
    pub fn step(&self, d1: f64, d2: f64, scaled_flows: [f64; 3], h: f64) -> Result<TankUpdate> {
        let c = &self.config;
        let outflow: f64 = scaled_flows.iter().sum();
        let requested = self.beta() * (c.eta1 * d1 + c.eta2 * d2);
        let mut energy = self.energy + h * (requested - outflow);
        let mut inflow = requested;
        if energy > c.upper {
            inflow = (c.upper - self.energy) / h + outflow;
            energy = c.upper;
        }
        let mut clamped = 0.0;
        if energy < c.lower {
            clamped = c.lower - energy;
            if clamped > MAX_CLAMP {
                return Err(Error::TankUnderflow {
                    deficit: clamped,
                    limit: MAX_CLAMP,
                });
            }
            energy = c.lower;
        }
        Ok(TankUpdate {
            state: TankState {
                energy,
                config: self.config,
            },
            inflow,
            outflow,
            clamped,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beta_gate() {
        assert_eq!(beta(5.0, 10.0), 1.0);
        assert_eq!(beta(10.1, 10.0), 0.0);
        assert_eq!(beta(10.0, 10.0), 1.0);
    }

    #[test]
    fn alpha_band_endpoints() {
        assert_eq!(alpha(0.2, 0.2, 0.5), 0.0);
        assert_relative_eq!(alpha(0.45, 0.2, 0.5), 0.5, epsilon = 1e-15);
        assert_relative_eq!(alpha(0.7, 0.2, 0.5), 1.0, epsilon = 1e-15);
        assert_eq!(alpha(0.1, 0.2, 0.5), 0.0);
        assert_eq!(alpha(3.0, 0.2, 0.5), 1.0);
    }

    #[test]
    fn alpha_monotone_and_continuous_on_grid() {
        let (lo, eps) = (0.2, 0.5);
        let n = 1000;
        let mut prev = alpha(lo, lo, eps);
        for i in 1..=n {
            let h = lo + eps * i as f64 / n as f64;
            let a = alpha(h, lo, eps);
            assert!(a >= prev);
            // Lipschitz bound of the cosine step: π/(2ε)
            assert!(a - prev <= std::f64::consts::PI / (2.0 * eps) * eps / n as f64 + 1e-12);
            prev = a;
        }
        assert_relative_eq!(prev, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn no_flow_keeps_energy() {
        let t = TankState::new(TankConfig::default()).unwrap();
        let u = t.step(0.0, 0.0, [0.0; 3], 1e-3).unwrap();
        assert_eq!(u.state.energy(), t.energy());
    }

    #[test]
    fn inflow_is_scaled_by_eta() {
        let t = TankState::new(TankConfig::default()).unwrap();
        let u = t.step(0.6, 0.4, [0.0; 3], 1e-3).unwrap();
        assert_relative_eq!(u.state.energy() - t.energy(), 0.4e-3, epsilon = 1e-15);
    }

    #[test]
    fn full_tank_rejects_inflow() {
        let cfg = TankConfig {
            initial_energy: 10.0,
            ..Default::default()
        };
        let t = TankState::new(cfg).unwrap();
        let u = t.step(5.0, 5.0, [0.0; 3], 1e-3).unwrap();
        assert_eq!(u.state.energy(), 10.0);
        assert_eq!(u.inflow, 0.0);
    }

    #[test]
    fn near_full_tank_admits_partial_inflow() {
        let cfg = TankConfig {
            initial_energy: 10.0 - 1e-4,
            ..Default::default()
        };
        let t = TankState::new(cfg).unwrap();
        let u = t.step(500.0, 0.0, [0.0; 3], 1e-3).unwrap();
        assert!(u.state.energy() <= 10.0 + 1e-12);
        assert_relative_eq!(u.inflow * 1e-3, 1e-4, epsilon = 1e-12);
    }

    #[test]
    fn outflow_drains() {
        let t = TankState::new(TankConfig::default()).unwrap();
        let u = t.step(0.0, 0.0, [1.0, 2.0, -0.5], 1e-3).unwrap();
        assert_relative_eq!(t.energy() - u.state.energy(), 2.5e-3, epsilon = 1e-15);
        assert_eq!(u.outflow, 2.5);
    }

    #[test]
    fn small_clamp_at_floor_is_absorbed() {
        let cfg = TankConfig {
            initial_energy: 0.2 + 1e-5,
            ..Default::default()
        };
        let t = TankState::new(cfg).unwrap();
        let u = t.step(0.0, 0.0, [0.05, 0.0, 0.0], 1e-3).unwrap();
        assert_eq!(u.state.energy(), 0.2);
        assert_relative_eq!(u.clamped, 4e-5, epsilon = 1e-12);
    }

    #[test]
    fn large_clamp_is_underflow() {
        let t = TankState::new(TankConfig {
            initial_energy: 0.25,
            ..Default::default()
        })
        .unwrap();
        assert!(matches!(
            t.step(0.0, 0.0, [100.0, 0.0, 0.0], 1e-3),
            Err(Error::TankUnderflow { .. })
        ));
    }

    #[test]
    fn state_is_sqrt_of_twice_energy() {
        let t = TankState::new(TankConfig::default()).unwrap();
        assert_relative_eq!(t.state(), 10.0f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn validation() {
        let bad = TankConfig {
            lower: 10.0,
            upper: 10.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TankConfig {
            eta1: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(TankConfig::default().validate().is_ok());
    }
}
