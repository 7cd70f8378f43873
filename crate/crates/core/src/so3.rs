//! Rotation algebra on SO(3).
//!
//! Rotations are carried as orthonormal 3×3 matrices. The module provides the
//! hat/vee isomorphism between vectors and skew-symmetric matrices, the
//! axis-angle (rotation vector) conversions, attitude errors, and the
//! reduced-attitude decomposition `Re = Ry · Rr` that splits an error into a
//! thrust-direction ("tilt") part and a rotation about the body `e3` axis
//! ("yaw").
//!
//! Every operation is total. Degenerate axes (zero rotations, half turns,
//! inverted thrust) resolve to fixed conventions so results are reproducible.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance on `‖M + Mᵀ‖∞` accepted by [`vee`].
pub const SKEW_TOLERANCE: f64 = 1e-6;
/// Tolerance used when validating unit vectors and rotation matrices.
pub const ORTHO_TOLERANCE: f64 = 1e-9;
/// Below this value of `sin ρr` the tilt axis is undefined and falls back to `e1`.
pub const TILT_AXIS_TOLERANCE: f64 = 1e-9;

// Below this |sin ρ| the half-turn axis sign cannot be read from the skew part.
const HALF_TURN_SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum So3Error {
    #[error("matrix is not skew-symmetric (residual {residual:e})")]
    NotSkewSymmetric { residual: f64 },
    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },
    #[error("vector has non-finite components")]
    NonFinite,
    #[error("matrix is not a rotation (orthonormality residual {ortho:e}, det {det})")]
    NotRotation { ortho: f64, det: f64 },
    #[error("rotation angle {0} outside [0, pi]")]
    AngleOutOfRange(f64),
}

/// Skew-symmetric matrix with `hat(v) * y == v.cross(&y)`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`]. Rejects matrices whose symmetric residual exceeds
/// [`SKEW_TOLERANCE`].
pub fn vee(m: &Mat3) -> Result<Vec3, So3Error> {
    let residual = (m + m.transpose()).abs().max();
    if !(residual <= SKEW_TOLERANCE) {
        return Err(So3Error::NotSkewSymmetric { residual });
    }
    Ok(Vec3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)]))
}

/// `vee(M - Mᵀ) / 2`, the vector of the skew part of any square matrix.
///
/// For a rotation this is `sin ρ · n`.
pub fn vee_skew_part(m: &Mat3) -> Vec3 {
    Vec3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// A unit-length 3-vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitVec3(Vec3);

impl UnitVec3 {
    pub const E1: UnitVec3 = UnitVec3(Vec3::new(1.0, 0.0, 0.0));
    pub const E2: UnitVec3 = UnitVec3(Vec3::new(0.0, 1.0, 0.0));
    pub const E3: UnitVec3 = UnitVec3(Vec3::new(0.0, 0.0, 1.0));

    /// Accepts `v` only if its norm is within [`ORTHO_TOLERANCE`] of one.
    pub fn new(v: Vec3) -> Result<Self, So3Error> {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > ORTHO_TOLERANCE {
            return Err(So3Error::NotUnit { norm });
        }
        Ok(Self(v))
    }

    /// Normalizes `v`. Fails for zero or non-finite input.
    pub fn normalize(v: Vec3) -> Result<Self, So3Error> {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let norm = v.norm();
        if norm == 0.0 {
            return Err(So3Error::NotUnit { norm });
        }
        Ok(Self(v / norm))
    }

    pub(crate) fn new_unchecked(v: Vec3) -> Self {
        Self(v)
    }

    pub fn into_inner(self) -> Vec3 {
        self.0
    }

    pub fn as_vec(&self) -> &Vec3 {
        &self.0
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0.dot(other)
    }
}

impl std::ops::Deref for UnitVec3 {
    type Target = Vec3;

    fn deref(&self) -> &Vec3 {
        &self.0
    }
}

impl std::ops::Neg for UnitVec3 {
    type Output = UnitVec3;

    fn neg(self) -> UnitVec3 {
        UnitVec3(-self.0)
    }
}

/// Orthonormal 3×3 matrix with determinant +1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Mat3::identity())
    }

    /// Validates `mᵀm = I` and `det m = 1` to [`ORTHO_TOLERANCE`].
    pub fn from_matrix(m: Mat3) -> Result<Self, So3Error> {
        if !m.iter().all(|c| c.is_finite()) {
            return Err(So3Error::NonFinite);
        }
        let ortho = orthonormality_residual(&m);
        let det = m.determinant();
        if ortho > ORTHO_TOLERANCE || (det - 1.0).abs() > ORTHO_TOLERANCE {
            return Err(So3Error::NotRotation { ortho, det });
        }
        Ok(Self(m))
    }

    /// Wraps `m` without validation. The caller guarantees `m ∈ SO(3)`.
    pub fn from_matrix_unchecked(m: Mat3) -> Self {
        Self(m)
    }

    /// Rotation by `angle` radians about `axis` (any angle, any sign).
    pub fn from_axis_angle(axis: &UnitVec3, angle: f64) -> Self {
        rodrigues(axis, angle)
    }

    /// Exponential map of a rotation vector `v` (angle `‖v‖` about `v / ‖v‖`).
    pub fn exp(v: &Vec3) -> Self {
        let angle = v.norm();
        if angle == 0.0 {
            return Self::identity();
        }
        rodrigues(&UnitVec3(v / angle), angle)
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn into_inner(self) -> Mat3 {
        self.0
    }

    pub fn compose(&self, other: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * other.0)
    }

    pub fn rotate(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    /// The inverse, computed as the transpose.
    pub fn inverse(&self) -> RotationMatrix {
        RotationMatrix(self.0.transpose())
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Rotation angle in `[0, π]`.
    pub fn angle(&self) -> f64 {
        let s = vee_skew_part(&self.0).norm();
        let c = clamp_unit(0.5 * (self.0.trace() - 1.0));
        s.atan2(c)
    }

    /// `‖RᵀR − I‖∞`.
    pub fn orthonormality_residual(&self) -> f64 {
        orthonormality_residual(&self.0)
    }

    /// Nearest rotation to the stored matrix, by Björck iteration
    /// `R ← R (3I − RᵀR) / 2` until the residual drops below 1e-12.
    ///
    /// Converges quadratically for matrices that are already close to SO(3),
    /// which is the only case the integrator produces.
    pub fn orthonormalized(&self) -> RotationMatrix {
        let mut r = self.0;
        for _ in 0..32 {
            let rtr = r.transpose() * r;
            if (rtr - Mat3::identity()).abs().max() < 1e-12 {
                break;
            }
            r = 0.5 * r * (3.0 * Mat3::identity() - rtr);
        }
        RotationMatrix(r)
    }
}

impl Default for RotationMatrix {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        self.compose(&rhs)
    }
}

impl Mul<&RotationMatrix> for &RotationMatrix {
    type Output = RotationMatrix;

    fn mul(self, rhs: &RotationMatrix) -> RotationMatrix {
        self.compose(rhs)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;

    fn mul(self, rhs: Vec3) -> Vec3 {
        self.rotate(&rhs)
    }
}

impl Mul<&Vec3> for &RotationMatrix {
    type Output = Vec3;

    fn mul(self, rhs: &Vec3) -> Vec3 {
        self.rotate(rhs)
    }
}

impl fmt::Display for RotationMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{:.6}, {:.6}, {:.6}], [{:.6}, {:.6}, {:.6}], [{:.6}, {:.6}, {:.6}]]",
            m[(0, 0)],
            m[(0, 1)],
            m[(0, 2)],
            m[(1, 0)],
            m[(1, 1)],
            m[(1, 2)],
            m[(2, 0)],
            m[(2, 1)],
            m[(2, 2)]
        )
    }
}

fn orthonormality_residual(m: &Mat3) -> f64 {
    (m.transpose() * m - Mat3::identity()).abs().max()
}

fn rodrigues(axis: &UnitVec3, angle: f64) -> RotationMatrix {
    let n = axis.0;
    let (s, c) = angle.sin_cos();
    RotationMatrix(c * Mat3::identity() + (1.0 - c) * n * n.transpose() + s * hat(&n))
}

/// Eigen-axis and angle of a rotation, with the angle in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: UnitVec3,
    pub angle: f64,
}

impl AxisAngle {
    pub fn new(axis: UnitVec3, angle: f64) -> Result<Self, So3Error> {
        if !(0.0..=std::f64::consts::PI).contains(&angle) {
            return Err(So3Error::AngleOutOfRange(angle));
        }
        Ok(Self { axis, angle })
    }

    /// Builds from an arbitrary (not necessarily unit) axis and an angle in
    /// degrees. Negative angles flip the axis.
    pub fn from_degrees(axis: Vec3, degrees: f64) -> Result<Self, So3Error> {
        let axis = UnitVec3::normalize(axis)?;
        let angle = degrees.to_radians();
        if angle < 0.0 {
            Self::new(-axis, -angle)
        } else {
            Self::new(axis, angle)
        }
    }

    /// `ρ · n`.
    pub fn rotation_vector(&self) -> Vec3 {
        self.angle * self.axis.0
    }
}

/// `cos ρ·I + (1 − cos ρ)·n·nᵀ + sin ρ·hat(n)`.
pub fn rot_from_axis_angle(aa: &AxisAngle) -> RotationMatrix {
    rodrigues(&aa.axis, aa.angle)
}

/// Recovers `(n, ρ)` from a rotation matrix.
///
/// Away from the half turn the axis is read from the skew part. For
/// `ρ > π/2` it is read from the dominant column of the symmetric part
/// `(R + Rᵀ)/2 − cos ρ·I = (1 − cos ρ)·n·nᵀ`, with its sign taken from the
/// skew part when that is resolvable and otherwise chosen so that the first
/// nonzero component is positive. A zero rotation returns `e1`.
pub fn axis_angle_from_rot(r: &RotationMatrix) -> AxisAngle {
    let m = &r.0;
    let skew = vee_skew_part(m);
    let s = skew.norm();
    let c = clamp_unit(0.5 * (m.trace() - 1.0));
    let angle = s.atan2(c);

    if s == 0.0 && c >= 0.0 {
        return AxisAngle {
            axis: UnitVec3::E1,
            angle: 0.0,
        };
    }
    if c >= 0.0 {
        return AxisAngle {
            axis: UnitVec3(skew / s),
            angle,
        };
    }

    let sym = 0.5 * (m + m.transpose()) - c * Mat3::identity();
    let col = (0..3)
        .max_by(|&a, &b| sym[(a, a)].total_cmp(&sym[(b, b)]))
        .unwrap_or(0);
    let mut axis = sym.column(col).into_owned();
    axis /= axis.norm();
    if s > HALF_TURN_SIGN_TOLERANCE {
        if axis.dot(&skew) < 0.0 {
            axis = -axis;
        }
    } else {
        axis = canonical_sign(axis);
    }
    AxisAngle {
        axis: UnitVec3(axis),
        angle,
    }
}

// First component with magnitude above round-off decides the sign.
fn canonical_sign(v: Vec3) -> Vec3 {
    match v.iter().find(|c| c.abs() > 1e-12) {
        Some(&c) if c < 0.0 => -v,
        _ => v,
    }
}

/// `R_des⁻¹ · R`, the rotation from the desired frame to the actual frame.
pub fn attitude_error(r_des: &RotationMatrix, r: &RotationMatrix) -> RotationMatrix {
    RotationMatrix(r_des.0.transpose() * r.0)
}

/// Split of an attitude error into tilt and yaw parts, `Re = Ry · Rr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedAttitude {
    /// Smallest rotation aligning the thrust axis (`Rr`).
    pub r_tilt: RotationMatrix,
    /// Remaining rotation about `e3` (`Ry`).
    pub r_yaw: RotationMatrix,
    /// `(nr, ρr)`; `nr ⊥ e3`.
    pub tilt: AxisAngle,
    /// `(ny, ρy)`; `ny = ±e3`.
    pub yaw: AxisAngle,
}

/// Reduced-attitude decomposition of an attitude error.
///
/// With `v = Reᵀ·e3`, `ρr` is the angle between `v` and `e3` and
/// `nr = (v × e3) / sin ρr`, so that `Rr` carries `v` onto `e3`. When the
/// tilt angle is zero or the thrust axis is exactly inverted, `nr = e1`.
/// `Ry = Re·Rrᵀ` is a pure rotation about `e3`; its signed angle is read
/// directly from its upper-left block and mapped to `(±e3, |angle|)`. A zero
/// yaw reports the axis `+e3`.
pub fn reduced_decompose(re: &RotationMatrix) -> ReducedAttitude {
    let tilt = tilt_axis_angle(re);
    let r_tilt = rot_from_axis_angle(&tilt);
    let r_yaw = RotationMatrix(re.0 * r_tilt.0.transpose());

    let ry = &r_yaw.0;
    let signed = ry[(1, 0)].atan2(ry[(0, 0)]);
    let yaw = if signed < 0.0 {
        AxisAngle {
            axis: -UnitVec3::E3,
            angle: -signed,
        }
    } else {
        AxisAngle {
            axis: UnitVec3::E3,
            angle: signed,
        }
    };

    ReducedAttitude {
        r_tilt,
        r_yaw,
        tilt,
        yaw,
    }
}

/// Tilt part `(nr, ρr)` only; cheaper than a full [`reduced_decompose`].
pub fn tilt_axis_angle(re: &RotationMatrix) -> AxisAngle {
    // v = Reᵀ e3 is the third row of Re.
    let m = &re.0;
    let v = Vec3::new(m[(2, 0)], m[(2, 1)], m[(2, 2)]);
    let sin_tilt = v.x.hypot(v.y);
    let angle = sin_tilt.atan2(v.z);
    let axis = if sin_tilt > TILT_AXIS_TOLERANCE {
        // hat(v)·e3 = v × e3 = (v.y, −v.x, 0)
        UnitVec3(Vec3::new(v.y, -v.x, 0.0) / sin_tilt)
    } else {
        UnitVec3::E1
    };
    AxisAngle { axis, angle }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rot(axis: [f64; 3], angle: f64) -> RotationMatrix {
        RotationMatrix::from_axis_angle(
            &UnitVec3::normalize(Vec3::from(axis)).unwrap(),
            angle,
        )
    }

    #[test]
    fn hat_matches_explicit_form() {
        let m = hat(&Vec3::new(1.0, 2.0, 3.0));
        let expected = Mat3::new(0.0, -3.0, 2.0, 3.0, 0.0, -1.0, -2.0, 1.0, 0.0);
        assert_eq!(m, expected);
        assert_eq!(hat(&Vec3::zeros()), Mat3::zeros());
    }

    #[test]
    fn vee_inverts_hat() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(&v)).unwrap(), v);
        assert_eq!(vee(&Mat3::zeros()).unwrap(), Vec3::zeros());
    }

    #[test]
    fn vee_rejects_symmetric_input() {
        let err = vee(&Mat3::identity()).unwrap_err();
        assert!(matches!(err, So3Error::NotSkewSymmetric { .. }));
        let mut m = hat(&Vec3::new(0.1, 0.2, 0.3));
        m[(0, 1)] += 1e-3;
        assert!(vee(&m).is_err());
        // within tolerance is fine
        let mut m = hat(&Vec3::new(0.1, 0.2, 0.3));
        m[(0, 1)] += 1e-8;
        assert!(vee(&m).is_ok());
    }

    #[test]
    fn skew_part_of_rotation_is_sine_axis() {
        let re = rot([1.0, 0.0, 0.0], PI / 6.0);
        let m = re.matrix();
        let v = vee(&(m - m.transpose())).unwrap() / 2.0;
        assert_abs_diff_eq!(v, Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(vee_skew_part(m), v, epsilon = 1e-16);
    }

    #[test]
    fn canonical_axis_angle_values() {
        let any = UnitVec3::normalize(Vec3::new(0.3, -0.2, 0.9)).unwrap();
        assert_abs_diff_eq!(
            *rot_from_axis_angle(&AxisAngle::new(any, 0.0).unwrap()).matrix(),
            Mat3::identity()
        );
        let quarter = rot_from_axis_angle(&AxisAngle::new(UnitVec3::E3, FRAC_PI_2).unwrap());
        let expected = Mat3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(*quarter.matrix(), expected, epsilon = 1e-15);
        let half = rot_from_axis_angle(&AxisAngle::new(UnitVec3::E1, PI).unwrap());
        assert_abs_diff_eq!(
            *half.matrix(),
            Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)),
            epsilon = 1e-15
        );
    }

    #[test]
    fn axis_angle_rejects_out_of_range() {
        assert!(AxisAngle::new(UnitVec3::E1, -0.1).is_err());
        assert!(AxisAngle::new(UnitVec3::E1, 3.2).is_err());
        assert!(UnitVec3::new(Vec3::new(1.0, 1.0, 0.0)).is_err());
        assert!(UnitVec3::normalize(Vec3::zeros()).is_err());
    }

    #[test]
    fn from_degrees_flips_negative_angles() {
        let aa = AxisAngle::from_degrees(Vec3::new(0.0, 0.0, 2.0), -90.0).unwrap();
        assert_eq!(*aa.axis, Vec3::new(0.0, 0.0, -1.0));
        assert_abs_diff_eq!(aa.angle, FRAC_PI_2);
    }

    #[test]
    fn identity_has_e1_axis() {
        let aa = axis_angle_from_rot(&RotationMatrix::identity());
        assert_eq!(aa.angle, 0.0);
        assert_eq!(aa.axis, UnitVec3::E1);
    }

    #[test]
    fn half_turn_tie_break() {
        let r = RotationMatrix::from_matrix(Mat3::from_diagonal(&Vec3::new(1.0, -1.0, -1.0)))
            .unwrap();
        let aa = axis_angle_from_rot(&r);
        assert_eq!(aa.angle, PI);
        assert_eq!(aa.axis, UnitVec3::E1);

        // sign rule picks the positive first component even for a negated input axis
        let n = Vec3::new(-0.6, 0.0, 0.8);
        let r = RotationMatrix::from_matrix_unchecked(
            2.0 * n * n.transpose() - Mat3::identity(),
        );
        let aa = axis_angle_from_rot(&r);
        assert_abs_diff_eq!(aa.angle, PI);
        assert_abs_diff_eq!(*aa.axis, Vec3::new(0.6, 0.0, -0.8), epsilon = 1e-15);
    }

    #[test]
    fn near_half_turn_keeps_axis_sign() {
        let n = UnitVec3::normalize(Vec3::new(-0.2, 0.5, -0.7)).unwrap();
        for delta in [1e-3, 1e-6, 1e-9] {
            let aa = axis_angle_from_rot(&RotationMatrix::from_axis_angle(&n, PI - delta));
            assert_abs_diff_eq!(aa.angle, PI - delta, epsilon = 1e-7);
            assert_abs_diff_eq!(*aa.axis, *n, epsilon = 1e-7);
        }
    }

    #[test]
    fn error_of_equal_attitudes_is_identity() {
        let r = rot([0.2, -0.4, 0.5], 2.1);
        assert_abs_diff_eq!(
            *attitude_error(&r, &r).matrix(),
            Mat3::identity(),
            epsilon = 1e-15
        );
        assert_eq!(attitude_error(&RotationMatrix::identity(), &r), r);
    }

    #[test]
    fn error_composes_about_common_axis() {
        let re = attitude_error(&rot([0.0, 0.0, 1.0], FRAC_PI_2), &rot([0.0, 0.0, 1.0], PI));
        assert_abs_diff_eq!(
            *re.matrix(),
            *rot([0.0, 0.0, 1.0], FRAC_PI_2).matrix(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn compose_rotate_inverse() {
        let r = rot([0.3, 0.1, -0.2], 1.3);
        assert_abs_diff_eq!(
            *r.compose(&r.inverse()).matrix(),
            Mat3::identity(),
            epsilon = 1e-15
        );
        let v = Vec3::new(0.1, 2.0, -3.0);
        assert_eq!(RotationMatrix::identity().rotate(&v), v);
        let q = rot([0.0, 0.0, 1.0], FRAC_PI_2);
        assert_abs_diff_eq!(q * Vec3::x(), Vec3::y(), epsilon = 1e-15);
    }

    #[test]
    fn from_matrix_validates() {
        assert!(RotationMatrix::from_matrix(Mat3::identity() * 1.01).is_err());
        assert!(RotationMatrix::from_matrix(-Mat3::identity()).is_err());
        assert!(RotationMatrix::from_matrix(*rot([1.0, 2.0, 3.0], 0.7).matrix()).is_ok());
    }

    #[test]
    fn orthonormalize_restores_rotation() {
        let r = rot([1.0, 2.0, 3.0], 0.7);
        let perturbed = RotationMatrix::from_matrix_unchecked(
            r.matrix() + Mat3::new(1e-6, -2e-6, 0.0, 3e-7, 0.0, 1e-6, 0.0, 0.0, -5e-7),
        );
        let fixed = perturbed.orthonormalized();
        assert!(fixed.orthonormality_residual() < 1e-12);
        assert_abs_diff_eq!((fixed.matrix().determinant()), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(*fixed.matrix(), *r.matrix(), epsilon = 1e-5);
    }

    #[test]
    fn decompose_identity_and_pure_yaw() {
        let red = reduced_decompose(&RotationMatrix::identity());
        assert_eq!(red.tilt.angle, 0.0);
        assert_eq!(red.yaw.angle, 0.0);
        assert_eq!(red.tilt.axis, UnitVec3::E1);

        let red = reduced_decompose(&rot([0.0, 0.0, 1.0], 1.0));
        assert_abs_diff_eq!(red.tilt.angle, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(red.yaw.angle, 1.0, epsilon = 1e-15);
        assert_eq!(red.yaw.axis, UnitVec3::E3);

        let red = reduced_decompose(&rot([0.0, 0.0, 1.0], -1.0));
        assert_abs_diff_eq!(red.yaw.angle, 1.0, epsilon = 1e-15);
        assert_eq!(red.yaw.axis, -UnitVec3::E3);
    }

    #[test]
    fn decompose_pure_tilt() {
        let red = reduced_decompose(&rot([1.0, 0.0, 0.0], 1.0));
        assert_abs_diff_eq!(red.tilt.angle, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(*red.tilt.axis, Vec3::x(), epsilon = 1e-15);
        assert_abs_diff_eq!(red.yaw.angle, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn decompose_inverted_thrust_uses_e1() {
        let red = reduced_decompose(&rot([0.0, 1.0, 0.0], PI));
        assert_abs_diff_eq!(red.tilt.angle, PI, epsilon = 1e-15);
        assert_eq!(red.tilt.axis, UnitVec3::E1);
        // rot(e2, π) = rot(e3, π) · rot(e1, π)
        assert_abs_diff_eq!(red.yaw.angle, PI, epsilon = 1e-12);
        let back = red.r_yaw * red.r_tilt;
        assert_abs_diff_eq!(
            *back.matrix(),
            *rot([0.0, 1.0, 0.0], PI).matrix(),
            epsilon = 1e-12
        );
    }
}
