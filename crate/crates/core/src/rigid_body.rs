//! Newton–Euler plant of the vehicle.
//!
//! The dynamics are `M·ν̇ = C(ω)·ν + w_c + w_g + w_ext` with
//! `M = blkdiag(J, m·I₃)` and `C = blkdiag(J·[ω]×, −m·[ω]×)`, all in the body
//! frame. Note that `J·[ω]×·ω` vanishes identically, so this plant carries no
//! gyroscopic torque; controller and observer use the same model.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::geometry::{angular, blkdiag, linear, skew, stack, Mat3, Mat6, Rotation, Vec3, Vec6};

pub const GRAVITY: f64 = 9.81;

/// Stacked `[torque; force]` in the body frame (N·m, N).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Wrench(pub Vec6);

impl Wrench {
    pub fn zero() -> Self {
        Self(Vec6::zeros())
    }

    pub fn from_parts(torque: &Vec3, force: &Vec3) -> Self {
        Self(stack(torque, force))
    }

    pub fn torque(&self) -> Vec3 {
        angular(&self.0)
    }

    pub fn force(&self) -> Vec3 {
        linear(&self.0)
    }

    /// Diagonal scaling `diag(gains)·w`.
    pub fn scaled(&self, gains: &Vec6) -> Self {
        Self(self.0.component_mul(gains))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl Add for Wrench {
    type Output = Wrench;
    fn add(self, rhs: Wrench) -> Wrench {
        Wrench(self.0 + rhs.0)
    }
}

impl Sub for Wrench {
    type Output = Wrench;
    fn sub(self, rhs: Wrench) -> Wrench {
        Wrench(self.0 - rhs.0)
    }
}

impl Neg for Wrench {
    type Output = Wrench;
    fn neg(self) -> Wrench {
        Wrench(-self.0)
    }
}

impl AddAssign for Wrench {
    fn add_assign(&mut self, rhs: Wrench) {
        self.0 += rhs.0;
    }
}

impl Mul<f64> for Wrench {
    type Output = Wrench;
    fn mul(self, rhs: f64) -> Wrench {
        Wrench(self.0 * rhs)
    }
}

/// Mass and rotational inertia of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InertiaParams {
    mass: f64,
    inertia: Mat3,
}

impl Default for InertiaParams {
    fn default() -> Self {
        Self {
            mass: 4.0,
            inertia: Mat3::from_diagonal(&Vec3::new(0.08, 0.08, 0.14)),
        }
    }
}

impl InertiaParams {
    /// `inertia` must be symmetric positive definite and `mass` positive.
    pub fn new(mass: f64, inertia: Mat3) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidInertia(format!(
                "mass must be positive, got {mass}"
            )));
        }
        if (inertia - inertia.transpose()).amax() > 1e-12 {
            return Err(Error::InvalidInertia(
                "inertia tensor is not symmetric".into(),
            ));
        }
        let eig = inertia.symmetric_eigenvalues();
        if eig.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::InvalidInertia(format!(
                "inertia tensor is not positive definite (eigenvalues {:?})",
                eig.as_slice()
            )));
        }
        Ok(Self { mass, inertia })
    }

    pub fn diagonal(mass: f64, principal: Vec3) -> Result<Self> {
        Self::new(mass, Mat3::from_diagonal(&principal))
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn inertia(&self) -> &Mat3 {
        &self.inertia
    }

    /// `M = blkdiag(J, m·I₃)`.
    pub fn generalized(&self) -> Mat6 {
        blkdiag(&self.inertia, &(Mat3::identity() * self.mass))
    }

    pub fn generalized_inverse(&self) -> Mat6 {
        let j_inv = self
            .inertia
            .try_inverse()
            .expect("positive-definite inertia is invertible");
        blkdiag(&j_inv, &(Mat3::identity() / self.mass))
    }
}

/// Pose and body twist `[ω; v]` of the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidBodyState {
    pub rotation: Rotation,
    pub position: Vec3,
    pub twist: Vec6,
}

impl RigidBodyState {
    pub fn at_rest(position: Vec3) -> Self {
        Self {
            rotation: Rotation::identity(),
            position,
            twist: Vec6::zeros(),
        }
    }

    pub fn angular_velocity(&self) -> Vec3 {
        angular(&self.twist)
    }

    pub fn linear_velocity(&self) -> Vec3 {
        linear(&self.twist)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|x| x.is_finite())
            && self.twist.iter().all(|x| x.is_finite())
            && self.rotation.matrix().iter().all(|x| x.is_finite())
    }
}

pub fn coriolis_matrix(params: &InertiaParams, omega: &Vec3) -> Mat6 {
    let s = skew(omega);
    blkdiag(&(params.inertia * s), &(s * -params.mass))
}

/// Gravity expressed in the body frame: zero torque, force `m·Rᵀ·[0, 0, −g]`.
pub fn gravity_wrench(params: &InertiaParams, rotation: &Rotation) -> Wrench {
    let f = rotation.inverse_rotate(&Vec3::new(0.0, 0.0, -params.mass * GRAVITY));
    Wrench::from_parts(&Vec3::zeros(), &f)
}

pub fn acceleration(
    state: &RigidBodyState,
    params: &InertiaParams,
    command: &Wrench,
    external: &Wrench,
) -> Vec6 {
    accel_at(&state.rotation, &state.twist, params, command, external)
}

fn accel_at(
    rotation: &Rotation,
    twist: &Vec6,
    params: &InertiaParams,
    command: &Wrench,
    external: &Wrench,
) -> Vec6 {
    let c = coriolis_matrix(params, &angular(twist));
    let total = c * twist + command.0 + gravity_wrench(params, rotation).0 + external.0;
    params.generalized_inverse() * total
}

/// Generalized momentum `M·ν`.
pub fn momentum(state: &RigidBodyState, params: &InertiaParams) -> Vec6 {
    params.generalized() * state.twist
}

/// `½·νᵀ·M·ν`.
pub fn kinetic_energy(state: &RigidBodyState, params: &InertiaParams) -> f64 {
    0.5 * state.twist.dot(&momentum(state, params))
}

/// Result of one integration step.
#[derive(Debug, Clone, Copy)]
pub struct StepOutcome {
    pub state: RigidBodyState,
    /// RK4 quadrature of `ν` over the step divided by `h`; the work done by a
    /// wrench `w` held over the step is `h·wᵀ·mean_twist`.
    pub mean_twist: Vec6,
}

/// One RK4 step with `command` and `external` held constant.
pub fn step(
    state: &RigidBodyState,
    params: &InertiaParams,
    command: &Wrench,
    external: &Wrench,
    h: f64,
) -> Result<RigidBodyState> {
    integrate(state, params, command, external, h).map(|o| o.state)
}

/// Like [`step`], also returning the mean twist over the interval.
///
/// The attitude is advanced on the group, `R·exp([ω̄·h]×)` per stage, and
/// re-orthonormalized; the position follows `ṗ = R·v`.
pub fn integrate(
    state: &RigidBodyState,
    params: &InertiaParams,
    command: &Wrench,
    external: &Wrench,
    h: f64,
) -> Result<StepOutcome> {
    assert!(
        h > 0.0 && h <= 0.01,
        "step size must be in (0, 0.01] s, got {h}"
    );
    let r0 = state.rotation;
    let nu0 = state.twist;

    let stage = |r: &Rotation, nu: &Vec6| {
        let a = accel_at(r, nu, params, command, external);
        let pdot = r.rotate(&linear(nu));
        (a, pdot)
    };

    let (a1, pd1) = stage(&r0, &nu0);
    let w1 = angular(&nu0);

    let nu2 = nu0 + a1 * (h / 2.0);
    let r2 = r0.integrate(&(w1 * (h / 2.0)));
    let (a2, pd2) = stage(&r2, &nu2);
    let w2 = angular(&nu2);

    let nu3 = nu0 + a2 * (h / 2.0);
    let r3 = r0.integrate(&(w2 * (h / 2.0)));
    let (a3, pd3) = stage(&r3, &nu3);
    let w3 = angular(&nu3);

    let nu4 = nu0 + a3 * h;
    let r4 = r0.integrate(&(w3 * h));
    let (a4, pd4) = stage(&r4, &nu4);
    let w4 = angular(&nu4);

    let twist = nu0 + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
    let position = state.position + (pd1 + pd2 * 2.0 + pd3 * 2.0 + pd4) * (h / 6.0);
    let rotation = r0.integrate(&((w1 + w2 * 2.0 + w3 * 2.0 + w4) * (h / 6.0)));
    let mean_twist = (nu0 + nu2 * 2.0 + nu3 * 2.0 + nu4) / 6.0;

    let next = RigidBodyState {
        rotation,
        position,
        twist,
    };
    if !next.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(StepOutcome {
        state: next,
        mean_twist,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params() -> InertiaParams {
        InertiaParams::default()
    }

    #[test]
    fn rejects_bad_inertia() {
        assert!(InertiaParams::diagonal(0.0, Vec3::new(1.0, 1.0, 1.0)).is_err());
        assert!(InertiaParams::diagonal(1.0, Vec3::new(1.0, -1.0, 1.0)).is_err());
        let mut j = Mat3::identity();
        j[(0, 1)] = 0.5;
        assert!(InertiaParams::new(1.0, j).is_err());
    }

    #[test]
    fn coriolis_zero_at_rest() {
        assert_eq!(coriolis_matrix(&params(), &Vec3::zeros()), Mat6::zeros());
    }

    #[test]
    fn coriolis_identity_inertia_block() {
        let p = InertiaParams::diagonal(2.0, Vec3::new(1.0, 1.0, 1.0)).unwrap();
        let c = coriolis_matrix(&p, &Vec3::z());
        assert_eq!(c.fixed_view::<3, 3>(0, 0).into_owned(), skew(&Vec3::z()));
        assert_eq!(
            c.fixed_view::<3, 3>(3, 3).into_owned(),
            skew(&Vec3::z()) * -2.0
        );
    }

    #[test]
    fn coriolis_does_no_work() {
        // oracle: explicit cross products per block
        let p = params();
        let w = Vec3::new(0.3, -1.2, 0.7);
        let v = Vec3::new(2.0, 0.5, -1.0);
        let nu = stack(&w, &v);
        let c = coriolis_matrix(&p, &w);
        let rot = w.dot(&(p.inertia() * w.cross(&w)));
        let lin = -p.mass() * v.dot(&w.cross(&v));
        assert_relative_eq!(nu.dot(&(c * nu)), rot + lin, epsilon = 1e-12);
        assert!(lin.abs() < 1e-12);
    }

    #[test]
    fn gravity_level_and_inverted() {
        let p = params();
        let g = gravity_wrench(&p, &Rotation::identity());
        assert_relative_eq!(
            g.0,
            Vec6::new(0.0, 0.0, 0.0, 0.0, 0.0, -39.24),
            epsilon = 1e-12
        );
        let inv = Rotation::from_axis_angle(&Vec3::x(), std::f64::consts::PI);
        let g = gravity_wrench(&p, &inv);
        assert_relative_eq!(g.force(), Vec3::new(0.0, 0.0, 39.24), epsilon = 1e-12);
    }

    #[test]
    fn hover_is_an_equilibrium() {
        let p = params();
        let s = RigidBodyState::at_rest(Vec3::new(0.0, 0.0, 1.0));
        let wc = -gravity_wrench(&p, &s.rotation);
        assert_eq!(acceleration(&s, &p, &wc, &Wrench::zero()), Vec6::zeros());
        let next = step(&s, &p, &wc, &Wrench::zero(), 1e-3).unwrap();
        assert!((next.position - s.position).norm() < 1e-12);
        assert!(next.twist.norm() < 1e-12);
    }

    #[test]
    fn free_fall_acceleration() {
        let p = params();
        let r = Rotation::from_axis_angle(&Vec3::new(1.0, 2.0, 0.5), 0.9);
        let s = RigidBodyState {
            rotation: r,
            ..Default::default()
        };
        let a = acceleration(&s, &p, &Wrench::zero(), &Wrench::zero());
        assert_relative_eq!(
            linear(&a),
            r.inverse_rotate(&Vec3::new(0.0, 0.0, -GRAVITY)),
            epsilon = 1e-12
        );
    }

    #[test]
    fn momentum_of_translation() {
        let s = RigidBodyState {
            twist: Vec6::new(0.0, 0.0, 0.0, 1.0, 0.0, 0.0),
            ..Default::default()
        };
        assert_eq!(
            momentum(&s, &params()),
            Vec6::new(0.0, 0.0, 0.0, 4.0, 0.0, 0.0)
        );
        assert_eq!(
            momentum(&RigidBodyState::default(), &params()),
            Vec6::zeros()
        );
    }

    #[test]
    fn free_fall_one_second() {
        let p = params();
        let mut s = RigidBodyState::at_rest(Vec3::zeros());
        for _ in 0..1000 {
            s = step(&s, &p, &Wrench::zero(), &Wrench::zero(), 1e-3).unwrap();
        }
        assert!((s.position.z + 4.905).abs() < 1e-4);
    }

    #[test]
    fn non_finite_input_is_reported() {
        let p = params();
        let s = RigidBodyState::default();
        let bad = Wrench(Vec6::repeat(f64::NAN));
        assert!(matches!(
            step(&s, &p, &bad, &Wrench::zero(), 1e-3),
            Err(Error::NonFiniteState)
        ));
    }

    #[test]
    fn step_is_deterministic() {
        let p = params();
        let s = RigidBodyState {
            twist: Vec6::new(0.3, -0.2, 1.0, 0.1, 0.2, -0.3),
            ..Default::default()
        };
        let w = Wrench(Vec6::new(0.1, 0.0, -0.2, 1.0, 2.0, 40.0));
        let a = step(&s, &p, &w, &Wrench::zero(), 1e-3).unwrap();
        let b = step(&s, &p, &w, &Wrench::zero(), 1e-3).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn gravity_norm_is_rotation_invariant(x in -1.0..1.0f64, y in -1.0..1.0f64, z in -1.0..1.0f64, t in -3.0..3.0f64) {
            let r = Rotation::from_axis_angle(&Vec3::new(x, y, z), t);
            let g = gravity_wrench(&params(), &r);
            prop_assert!((g.force().norm() - 4.0 * GRAVITY).abs() < 1e-12);
            prop_assert_eq!(g.torque(), Vec3::zeros());
        }

        #[test]
        fn acceleration_residual_vanishes(w in prop::array::uniform6(-2.0..2.0f64),
                                          c in prop::array::uniform6(-50.0..50.0f64),
                                          e in prop::array::uniform6(-50.0..50.0f64),
                                          ax in prop::array::uniform3(-1.0..1.0f64), t in -3.0..3.0f64) {
            let p = params();
            let s = RigidBodyState {
                rotation: Rotation::from_axis_angle(&Vec3::from(ax), t),
                position: Vec3::zeros(),
                twist: Vec6::from(w),
            };
            let wc = Wrench(Vec6::from(c));
            let we = Wrench(Vec6::from(e));
            let a = acceleration(&s, &p, &wc, &we);
            let residual = p.generalized() * a
                - coriolis_matrix(&p, &s.angular_velocity()) * s.twist
                - wc.0 - we.0 - gravity_wrench(&p, &s.rotation).0;
            prop_assert!(residual.amax() < 1e-10);
        }

        #[test]
        fn kinetic_energy_matches_momentum(w in prop::array::uniform6(-2.0..2.0f64)) {
            let p = params();
            let s = RigidBodyState { twist: Vec6::from(w), ..Default::default() };
            let j = p.inertia();
            let om = s.angular_velocity();
            let v = s.linear_velocity();
            let direct = 0.5 * om.dot(&(j * om)) + 0.5 * p.mass() * v.norm_squared();
            prop_assert!((kinetic_energy(&s, &p) - direct).abs() < 1e-12);
        }
    }
}
