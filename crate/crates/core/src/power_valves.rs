//! Power flows, valve-gain policies and valve matrices.
//!
//! Three ports can violate passivity: wrench tracking (`p₁ = νᵀ·w_c,tr`),
//! the impedance feed-forward (`p₂ = νᵀ·M̄·ŵ_ext`) and the observer
//! (`p₃ = p̂ᵀ·K_oᵀ·ω₃`). Each is scaled by a diagonal valve `Γ_i`, built from
//! five scalar gains stored in slot order:
//!
//! | slot | gain | port |
//! |------|------|------|
//! | 0 | γ₁ | tracking, body-x force only |
//! | 1 | γ₂ | impedance, linear |
//! | 2 | γ₃ | impedance, angular |
//! | 3 | γ₄ | observer, linear |
//! | 4 | γ₅ | observer, angular |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat6, Vec6};
use crate::rigid_body::Wrench;

pub const SLOTS: usize = 5;

/// One value per scalar valve slot.
pub type SlotGains = [f64; SLOTS];

/// Index of the body-x force component in a `[torque; force]` wrench.
pub const TRACKING_AXIS: usize = 3;

/// Instantaneous port powers (W).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PowerFlows {
    /// `νᵀ·K̄_d·ν`.
    pub d1: f64,
    /// `p̂ᵀ·K_oᵀ·K_o·p̂`.
    pub d2: f64,
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p2_lin: f64,
    pub p2_ang: f64,
    pub p3_lin: f64,
    pub p3_ang: f64,
}

impl PowerFlows {
    /// Flows in valve-slot order.
    pub fn slots(&self) -> SlotGains {
        [self.p1, self.p2_lin, self.p2_ang, self.p3_lin, self.p3_ang]
    }

    /// `p*_i = y_iᵀ·Γ*_i·ω_i` for the three ports.
    pub fn scaled(&self, valves: &ValveMatrices) -> [f64; 3] {
        let s = self.slots();
        let g = &valves.effective;
        [
            s[0] * g[0],
            s[1] * g[1] + s[2] * g[2],
            s[3] * g[3] + s[4] * g[4],
        ]
    }
}

fn split(y: &Vec6, w: &Vec6) -> (f64, f64) {
    let prod = y.component_mul(w);
    let ang = prod[0] + prod[1] + prod[2];
    let lin = prod[3] + prod[4] + prod[5];
    (lin, ang)
}

/// Computes the damping and port flows.
///
/// `observer_output` is `y₃ = K_o·p̂`; `tracking` is the tracking command as
/// seen by its valve.
pub fn compute_flows(
    twist: &Vec6,
    scaled_damping: &Mat6,
    observer_output: &Vec6,
    tracking: &Wrench,
    feedforward: &Wrench,
    omega3: &Vec6,
) -> PowerFlows {
    let (p2_lin, p2_ang) = split(twist, &feedforward.0);
    let (p3_lin, p3_ang) = split(observer_output, omega3);
    PowerFlows {
        d1: twist.dot(&(scaled_damping * twist)),
        d2: observer_output.norm_squared(),
        p1: twist.dot(&tracking.0),
        p2: p2_lin + p2_ang,
        p3: p3_lin + p3_ang,
        p2_lin,
        p2_ang,
        p3_lin,
        p3_ang,
    }
}

/// Individual gain scaling: `γ_i = p⁺_i / p_i` where `p_i > p⁺_i`.
pub fn policy_igs(flows: &SlotGains, limits: &SlotGains) -> SlotGains {
    std::array::from_fn(|i| {
        if flows[i] > limits[i] {
            limits[i] / flows[i]
        } else {
            1.0
        }
    })
}

/// Weighted gain scaling of a total power budget.
///
/// Negative flows are floored at zero in both the trigger sum and the
/// weighted denominator.
pub fn policy_wgs(flows: &SlotGains, total: f64, weights: &SlotGains) -> SlotGains {
    let positive = flows.map(|p| p.max(0.0));
    if positive.iter().sum::<f64>() <= total {
        return [1.0; SLOTS];
    }
    let denom: f64 = positive.iter().zip(weights).map(|(p, d)| p * d).sum();
    std::array::from_fn(|i| (weights[i] * total / denom).clamp(0.0, 1.0))
}

/// Sequential gain assignment in `priority` order (highest first).
///
/// Non-positive flows do not consume budget and keep their valve open.
pub fn policy_sga(flows: &SlotGains, total: f64, priority: &[usize; SLOTS]) -> SlotGains {
    let mut gains = [0.0; SLOTS];
    let mut used = 0.0;
    for &slot in priority {
        let p = flows[slot];
        gains[slot] = if p <= 0.0 {
            1.0
        } else if used + p <= total {
            used += p;
            1.0
        } else {
            let g = ((total - used) / p).clamp(0.0, 1.0);
            used = total.max(used);
            g
        };
    }
    gains
}

/// First-order lowpass on each gain: `y ← y + (1 − e^(−2π·f_c·h))·(x − y)`.
pub fn filter_gains(raw: &SlotGains, previous: &SlotGains, cutoff_hz: f64, h: f64) -> SlotGains {
    let k = smoothing_factor(cutoff_hz, h);
    std::array::from_fn(|i| previous[i] + k * (raw[i] - previous[i]))
}

pub fn smoothing_factor(cutoff_hz: f64, h: f64) -> f64 {
    1.0 - (-2.0 * std::f64::consts::PI * cutoff_hz * h).exp()
}

/// Diagonals of `Γ*₁`, `Γ*₂`, `Γ*₃` in `[angular; linear]` order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValveMatrices {
    pub gamma1: Vec6,
    pub gamma2: Vec6,
    pub gamma3: Vec6,
    /// `α·γ` per slot.
    pub effective: SlotGains,
}

impl ValveMatrices {
    pub fn open() -> Self {
        assemble(&[1.0; SLOTS], 1.0)
    }
}

pub fn assemble(filtered: &SlotGains, alpha: f64) -> ValveMatrices {
    let g = filtered.map(|x| x * alpha);
    let mut gamma1 = Vec6::zeros();
    gamma1[TRACKING_AXIS] = g[0];
    let block = |ang: f64, lin: f64| Vec6::new(ang, ang, ang, lin, lin, lin);
    ValveMatrices {
        gamma1,
        gamma2: block(g[2], g[1]),
        gamma3: block(g[4], g[3]),
        effective: g,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    #[default]
    Igs,
    Wgs,
    Sga,
    /// All valves open.
    None,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Igs, Policy::Wgs, Policy::Sga, Policy::None];

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Igs => "igs",
            Policy::Wgs => "wgs",
            Policy::Sga => "sga",
            Policy::None => "none",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "igs" => Ok(Policy::Igs),
            "wgs" => Ok(Policy::Wgs),
            "sga" => Ok(Policy::Sga),
            "none" => Ok(Policy::None),
            other => Err(Error::validation(format!("unknown policy `{other}`"))),
        }
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Policy selection and tuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub policy: Policy,
    pub igs_limits: SlotGains,
    pub wgs_total: f64,
    pub wgs_weights: SlotGains,
    pub sga_total: f64,
    /// Slot indices, highest priority first.
    pub sga_priority: [usize; SLOTS],
    pub cutoff_hz: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            policy: Policy::Igs,
            igs_limits: [1.0, 1.0, 1.0, 30.0, 3.0],
            wgs_total: 90.0,
            wgs_weights: [1.0, 5.0, 5.0, 10.0, 10.0],
            sga_total: 90.0,
            sga_priority: [4, 3, 2, 1, 0],
            cutoff_hz: 2.0,
        }
    }
}

impl PolicyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.igs_limits.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::validation("IGS power limits must be positive"));
        }
        if self.wgs_weights.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::validation("WGS weights must be positive"));
        }
        if !(self.wgs_total > 0.0) || !(self.sga_total > 0.0) {
            return Err(Error::validation("total power limits must be positive"));
        }
        let mut seen = [false; SLOTS];
        for &s in &self.sga_priority {
            if s >= SLOTS || seen[s] {
                return Err(Error::validation(format!(
                    "SGA priority must be a permutation of the {SLOTS} valve slots, got {:?}",
                    self.sga_priority.map(|s| s.wrapping_add(1))
                )));
            }
            seen[s] = true;
        }
        if !(self.cutoff_hz > 0.0) {
            return Err(Error::validation("valve filter cutoff must be positive"));
        }
        Ok(())
    }

    /// Unfiltered gains for the given flows.
    pub fn raw_gains(&self, flows: &PowerFlows) -> SlotGains {
        let f = flows.slots();
        match self.policy {
            Policy::Igs => policy_igs(&f, &self.igs_limits),
            Policy::Wgs => policy_wgs(&f, self.wgs_total, &self.wgs_weights),
            Policy::Sga => policy_sga(&f, self.sga_total, &self.sga_priority),
            Policy::None => [1.0; SLOTS],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn flows5(p: [f64; 5]) -> SlotGains {
        p
    }

    #[test]
    fn flows_vanish_without_motion() {
        let f = compute_flows(
            &Vec6::zeros(),
            &Mat6::identity(),
            &Vec6::repeat(1.0),
            &Wrench(Vec6::repeat(3.0)),
            &Wrench(Vec6::repeat(2.0)),
            &Vec6::repeat(1.0),
        );
        assert_eq!((f.d1, f.p1, f.p2), (0.0, 0.0, 0.0));
        let f = compute_flows(
            &Vec6::repeat(1.0),
            &Mat6::identity(),
            &Vec6::zeros(),
            &Wrench::zero(),
            &Wrench::zero(),
            &Vec6::repeat(1.0),
        );
        assert_eq!((f.d2, f.p3), (0.0, 0.0));
    }

    #[test]
    fn igs_examples() {
        let l = [1.0; 5];
        assert_eq!(policy_igs(&flows5([2.0, 0.0, 0.0, 0.0, 0.0]), &l)[0], 0.5);
        assert_eq!(policy_igs(&flows5([0.5, 0.0, 0.0, 0.0, 0.0]), &l)[0], 1.0);
        assert_eq!(policy_igs(&flows5([-3.0, 0.0, 0.0, 0.0, 0.0]), &l)[0], 1.0);
    }

    #[test]
    fn wgs_examples() {
        let d = [1.0, 5.0, 5.0, 10.0, 10.0];
        assert_eq!(policy_wgs(&[10.0, 0.0, 0.0, 0.0, 0.0], 90.0, &d), [1.0; 5]);
        let g = policy_wgs(&[100.0, 0.0, 0.0, 0.0, 0.0], 90.0, &d);
        assert_relative_eq!(g[0], 0.9, epsilon = 1e-15);
        assert!(g.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn sga_examples() {
        let order = [0, 1, 2, 3, 4];
        let g = policy_sga(&[50.0, 30.0, 20.0, 0.0, 0.0], 90.0, &order);
        assert_eq!(&g[..3], &[1.0, 1.0, 0.5]);
        let passed: f64 = [50.0, 30.0, 20.0].iter().zip(&g).map(|(p, g)| p * g).sum();
        assert_relative_eq!(passed, 90.0, epsilon = 1e-12);
        assert_eq!(
            policy_sga(&[10.0, 20.0, 5.0, 1.0, 0.0], 90.0, &order),
            [1.0; 5]
        );
        // with real flows in the trailing slots the exhausted budget closes them
        let g = policy_sga(&[50.0, 30.0, 20.0, 4.0, 1.0], 90.0, &order);
        assert_eq!(&g[3..], &[0.0, 0.0]);
    }

    #[test]
    fn sga_respects_priority_mapping() {
        // observer slots first, tracking last
        let g = policy_sga(&[40.0, 0.0, 0.0, 80.0, 20.0], 90.0, &[4, 3, 2, 1, 0]);
        assert_eq!(g[4], 1.0);
        assert_relative_eq!(g[3], 70.0 / 80.0, epsilon = 1e-15);
        assert_eq!(g[0], 0.0);
    }

    #[test]
    fn filter_converges_to_constant_input() {
        let mut y = [0.0; 5];
        for _ in 0..10_000 {
            y = filter_gains(&[0.3; 5], &y, 2.0, 1e-3);
        }
        assert!(y.iter().all(|v| (v - 0.3).abs() < 1e-6));
    }

    #[test]
    fn filter_step_response_time_constant() {
        let h = 1e-5;
        let tau = 1.0 / (2.0 * std::f64::consts::PI * 2.0);
        let n = (tau / h).round() as usize;
        let mut y = [0.0; 5];
        for _ in 0..n {
            y = filter_gains(&[1.0; 5], &y, 2.0, h);
        }
        let t = n as f64 * h;
        assert_relative_eq!(y[0], 1.0 - (-t / tau).exp(), epsilon = 1e-9);
        assert!((y[0] - 0.632).abs() < 1e-3);
    }

    #[test]
    fn smoothing_factor_at_one_khz() {
        assert_relative_eq!(
            smoothing_factor(2.0, 1e-3),
            1.0 - (-0.004 * std::f64::consts::PI).exp(),
            epsilon = 1e-16
        );
    }

    #[test]
    fn assemble_cases() {
        let closed = assemble(&[1.0; 5], 0.0);
        assert_eq!(closed.gamma1, Vec6::zeros());
        assert_eq!(closed.gamma2, Vec6::zeros());
        assert_eq!(closed.gamma3, Vec6::zeros());
        let open = ValveMatrices::open();
        assert_eq!(open.gamma2, Vec6::repeat(1.0));
        assert_eq!(open.gamma3, Vec6::repeat(1.0));
        assert_eq!(open.gamma1, Vec6::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0));
        let w = Wrench(Vec6::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0)).scaled(&open.gamma1);
        assert_eq!(w.0, Vec6::new(0.0, 0.0, 0.0, 4.0, 0.0, 0.0));
    }

    #[test]
    fn assemble_maps_slots_by_meaning() {
        let m = assemble(&[0.1, 0.2, 0.3, 0.4, 0.5], 1.0);
        assert_eq!(m.gamma2, Vec6::new(0.3, 0.3, 0.3, 0.2, 0.2, 0.2));
        assert_eq!(m.gamma3, Vec6::new(0.5, 0.5, 0.5, 0.4, 0.4, 0.4));
    }

    #[test]
    fn config_validation() {
        let mut c = PolicyConfig::default();
        assert!(c.validate().is_ok());
        c.sga_priority = [0, 0, 1, 2, 3];
        assert!(c.validate().is_err());
        let c = PolicyConfig {
            igs_limits: [1.0, 0.0, 1.0, 1.0, 1.0],
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }

    fn arb_flows() -> impl Strategy<Value = SlotGains> {
        prop::array::uniform5(-200.0..200.0f64)
    }

    proptest! {
        #[test]
        fn split_sums_to_total(nu in prop::array::uniform6(-3.0..3.0f64), y in prop::array::uniform6(-50.0..50.0f64),
                               ff in prop::array::uniform6(-50.0..50.0f64), w3 in prop::array::uniform6(-50.0..50.0f64)) {
            let f = compute_flows(&Vec6::from(nu), &Mat6::identity(), &Vec6::from(y), &Wrench::zero(),
                                  &Wrench(Vec6::from(ff)), &Vec6::from(w3));
            prop_assert!((f.p2_lin + f.p2_ang - Vec6::from(nu).dot(&Vec6::from(ff))).abs() < 1e-9);
            prop_assert!((f.p3_lin + f.p3_ang - Vec6::from(y).dot(&Vec6::from(w3))).abs() < 1e-9);
            prop_assert!(f.d1 >= 0.0 && f.d2 >= 0.0);
        }

        #[test]
        fn gains_stay_in_unit_interval(f in arb_flows()) {
            let cfg = PolicyConfig::default();
            for policy in Policy::ALL {
                let g = PolicyConfig { policy, ..cfg }.raw_gains(&PowerFlows {
                    p1: f[0], p2_lin: f[1], p2_ang: f[2], p3_lin: f[3], p3_ang: f[4], ..Default::default()
                });
                prop_assert!(g.iter().all(|x| (0.0..=1.0).contains(x)));
            }
        }

        #[test]
        fn igs_caps_each_positive_flow(f in arb_flows()) {
            let limits = [1.0, 1.0, 1.0, 30.0, 3.0];
            let g = policy_igs(&f, &limits);
            for i in 0..SLOTS {
                if f[i] > 0.0 {
                    prop_assert!(g[i] * f[i] <= limits[i] + 1e-9);
                }
            }
        }

        #[test]
        fn sga_caps_total(f in arb_flows()) {
            let g = policy_sga(&f, 90.0, &[4, 3, 2, 1, 0]);
            let passed: f64 = (0..SLOTS).filter(|&i| f[i] > 0.0).map(|i| g[i] * f[i]).sum();
            prop_assert!(passed <= 90.0 + 1e-9);
        }

        #[test]
        fn wgs_weighted_identity(f in arb_flows()) {
            // when triggered and no gain saturates, Σ γ_i·p_i⁺ = p⁺_tot exactly
            let d = [1.0, 5.0, 5.0, 10.0, 10.0];
            let g = policy_wgs(&f, 90.0, &d);
            let pos = f.map(|p| p.max(0.0));
            if pos.iter().sum::<f64>() > 90.0 && g.iter().all(|&x| x < 1.0) {
                let total: f64 = (0..SLOTS).map(|i| g[i] * pos[i]).sum();
                prop_assert!((total - 90.0).abs() < 1e-9);
            }
            // saturation at 1 only lowers the admitted total
            let total: f64 = (0..SLOTS).map(|i| g[i] * pos[i]).sum();
            prop_assert!(total <= 90.0_f64.max(pos.iter().sum()) + 1e-9);
        }
    }
}
