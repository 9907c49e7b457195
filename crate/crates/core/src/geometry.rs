//! Rotation-group utilities and pose errors.
//!
//! Six-vectors are always ordered `[angular; linear]`, matching the body
//! twist `[ω; v]` and the generalized inertia `blkdiag(J, m·I₃)`. Wrenches
//! follow the same convention: `[torque; force]`.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Vec6 = Vector6<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Mat6 = Matrix6<f64>;

/// Tolerance on `‖S + Sᵀ‖` accepted by [`vee`].
pub const SKEW_TOLERANCE: f64 = 1e-9;

/// Tolerance on `R·Rᵀ − I` (per entry) and `det R − 1` for a valid rotation.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

/// Matrix `S` with `S·x = v × x`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`skew`].
pub fn vee(s: &Mat3) -> Result<Vec3> {
    let asym = (s + s.transpose()).norm();
    if asym > SKEW_TOLERANCE {
        return Err(Error::NotSkewSymmetric { asymmetry: asym });
    }
    Ok(vee_unchecked(s))
}

// `A − Aᵀ` is exactly antisymmetric in IEEE arithmetic, so callers that build
// their argument that way skip the check.
fn vee_unchecked(s: &Mat3) -> Vec3 {
    Vec3::new(s[(2, 1)], s[(0, 2)], s[(1, 0)])
}

pub fn angular(v: &Vec6) -> Vec3 {
    v.fixed_rows::<3>(0).into_owned()
}

pub fn linear(v: &Vec6) -> Vec3 {
    v.fixed_rows::<3>(3).into_owned()
}

pub fn stack(angular: &Vec3, linear: &Vec3) -> Vec6 {
    Vec6::new(
        angular.x, angular.y, angular.z, linear.x, linear.y, linear.z,
    )
}

/// Block-diagonal 6×6 matrix `blkdiag(top_left, bottom_right)`.
pub fn blkdiag(top_left: &Mat3, bottom_right: &Mat3) -> Mat6 {
    let mut out = Mat6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(top_left);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(bottom_right);
    out
}

/// Rotation of the body frame with respect to the inertial frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Mat3);

impl Default for Rotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validates orthogonality and orientation of `m`.
    pub fn from_matrix(m: Mat3) -> Result<Self> {
        let ortho = (m * m.transpose() - Mat3::identity()).amax();
        let det = (m.determinant() - 1.0).abs();
        if !m.iter().all(|x| x.is_finite())
            || ortho > ROTATION_TOLERANCE
            || det > ROTATION_TOLERANCE
        {
            return Err(Error::InvalidRotation {
                orthogonality: ortho,
                determinant: m.determinant(),
            });
        }
        Ok(Self(m))
    }

    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::identity();
        }
        Self(exp_so3(&(axis * (angle / n))))
    }

    /// Rotation from a rotation vector (axis scaled by angle, radians).
    pub fn from_rotation_vector(phi: &Vec3) -> Self {
        Self(exp_so3(phi))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Rotation) -> Self {
        Self(self.0 * other.0)
    }

    /// `R·exp(skew(phi))` followed by re-orthonormalization.
    pub fn integrate(&self, phi: &Vec3) -> Self {
        Self(orthonormalize(&(self.0 * exp_so3(phi))))
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn inverse_rotate(&self, v: &Vec3) -> Vec3 {
        self.0.tr_mul(v)
    }

    /// Rotation vector (axis·angle) of this rotation.
    pub fn log(&self) -> Vec3 {
        nalgebra::Rotation3::from_matrix_unchecked(self.0).scaled_axis()
    }
}

/// Rodrigues' formula for `exp(skew(phi))`.
pub fn exp_so3(phi: &Vec3) -> Mat3 {
    let theta = phi.norm();
    let k = skew(phi);
    let (a, b) = if theta < 1e-6 {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / (theta * theta))
    };
    Mat3::identity() + k * a + k * k * b
}

/// Polar projection onto SO(3): the closest rotation in Frobenius norm.
pub fn orthonormalize(m: &Mat3) -> Mat3 {
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return *m,
    };
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// Attitude error `½·vee(R_dᵀR − RᵀR_d)`.
pub fn rotation_error(r: &Rotation, r_d: &Rotation) -> Vec3 {
    let a = r_d.0.tr_mul(&r.0);
    0.5 * vee_unchecked(&(a - a.transpose()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn skew_of_zero_is_zero() {
        assert_eq!(skew(&Vec3::zeros()), Mat3::zeros());
    }

    #[test]
    fn skew_is_cross_product() {
        let y = skew(&Vec3::x()) * Vec3::y();
        assert_eq!(y, Vec3::z());
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(skew(&v) * v, Vec3::zeros());
        assert_eq!(skew(&v), -skew(&v).transpose());
    }

    #[test]
    fn vee_inverts_skew() {
        assert_eq!(vee(&Mat3::zeros()).unwrap(), Vec3::zeros());
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&skew(&v)).unwrap(), v);
    }

    #[test]
    fn vee_rejects_symmetric_part() {
        let mut s = skew(&Vec3::new(1.0, 2.0, 3.0));
        s[(0, 1)] += 1e-6;
        assert!(matches!(vee(&s), Err(Error::NotSkewSymmetric { .. })));
    }

    #[test]
    fn rotation_error_identity_case() {
        let r = Rotation::from_axis_angle(&Vec3::new(0.3, -1.0, 2.0), 0.7);
        assert_relative_eq!(rotation_error(&r, &r), Vec3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn rotation_error_quarter_turn_about_z() {
        let r = Rotation::from_axis_angle(&Vec3::z(), std::f64::consts::FRAC_PI_2);
        // R − Rᵀ for a quarter turn about z has entries ∓2 at (0,1)/(1,0).
        let a = r.matrix();
        let direct = 0.5
            * Vec3::new(
                a[(2, 1)] - a[(1, 2)],
                a[(0, 2)] - a[(2, 0)],
                a[(1, 0)] - a[(0, 1)],
            );
        let e = rotation_error(&r, &Rotation::identity());
        assert_relative_eq!(e, direct, epsilon = 1e-15);
        assert_relative_eq!(e, Vec3::z(), epsilon = 1e-15);
    }

    #[test]
    fn from_matrix_rejects_reflections() {
        let m = Mat3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(Rotation::from_matrix(m).is_err());
        assert!(Rotation::from_matrix(Mat3::identity()).is_ok());
    }

    #[test]
    fn orthonormalize_restores_so3() {
        let r = Rotation::from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), 1.1);
        let perturbed = r.matrix() + Mat3::repeat(1e-6);
        let fixed = orthonormalize(&perturbed);
        assert!(Rotation::from_matrix(fixed).is_ok());
        assert_relative_eq!(fixed, *r.matrix(), epsilon = 1e-5);
    }

    fn unit_axis() -> impl Strategy<Value = Vec3> {
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
            .prop_filter("non-degenerate axis", |(x, y, z)| {
                x * x + y * y + z * z > 1e-3
            })
            .prop_map(|(x, y, z)| Vec3::new(x, y, z).normalize())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn vee_skew_round_trip(x in -1e3..1e3f64, y in -1e3..1e3f64, z in -1e3..1e3f64) {
            let v = Vec3::new(x, y, z);
            prop_assert_eq!(vee(&skew(&v)).unwrap(), v);
        }

        #[test]
        fn rotation_error_axis_angle(axis in unit_axis(), theta in -3.1..3.1f64) {
            let r = Rotation::from_axis_angle(&axis, theta);
            let e = rotation_error(&r, &Rotation::identity());
            prop_assert!((e - axis * theta.sin()).norm() < 1e-12);
        }

        #[test]
        fn rotation_error_antisymmetric_and_bounded(a in unit_axis(), ta in -3.1..3.1f64,
                                                  b in unit_axis(), tb in -3.1..3.1f64) {
            let r = Rotation::from_axis_angle(&a, ta);
            let r_d = Rotation::from_axis_angle(&b, tb);
            let e = rotation_error(&r, &r_d);
            prop_assert!((e + rotation_error(&r_d, &r)).norm() < 1e-12);
            prop_assert!(e.amax() <= 1.0 + 1e-12);
        }

        #[test]
        fn exp_map_is_a_rotation(axis in unit_axis(), theta in -10.0..10.0f64) {
            prop_assert!(Rotation::from_matrix(exp_so3(&(axis * theta))).is_ok());
        }
    }
}
