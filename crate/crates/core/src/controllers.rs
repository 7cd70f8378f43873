//! Attitude control laws.
//!
//! Each law maps an attitude error `(Re, ωe)` and a gain set to a commanded
//! error angular acceleration `αe,des`. They share the damping term
//! `−Kω·ωe` and differ only in how the attitude error is fed back:
//!
//! | law                         | attitude feedback                              |
//! |-----------------------------|------------------------------------------------|
//! | skew-symmetric (SS)         | `KR · sin ρe · ne`                             |
//! | rotation vector (RV)        | `KR · ρe · ne`                                 |
//! | quaternion tilt-prio. (QTP) | `2kr · sin(ρr/2) · nr + 2ky · sin(ρy/2) · ny`  |
//! | proportional tilt-prio.     | `ky · ρe · ne + (kr − ky) · ρr · nr`           |
//!
//! with `KR = diag(kr, kr, ky)`. All four agree to first order in the error.
//! Torque (including the gyroscopic term) is recovered separately by
//! [`torque_from_command`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::so3::{
    attitude_error, axis_angle_from_rot, hat, reduced_decompose, tilt_axis_angle,
    vee_skew_part, Mat3, RotationMatrix, Vec3,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("gain {name} must be positive and finite, got {value}")]
    NonPositiveGain { name: &'static str, value: f64 },
    #[error("yaw gain k_y = {k_y} exceeds tilt gain k_r = {k_r}")]
    YawGainExceedsTilt { k_r: f64, k_y: f64 },
    #[error("gain matrix {0} must be diagonal")]
    NotDiagonal(&'static str),
    #[error("attitude gain matrix must have the form diag(k_r, k_r, k_y)")]
    FreeFormAttitudeGain,
    #[error("inertia must be symmetric positive definite")]
    BadInertia,
    #[error("mass must be positive and finite, got {0}")]
    BadMass(f64),
    #[error("unknown controller {0:?} (expected SS, RV, QTP or NEW)")]
    UnknownController(String),
}

/// Gains shared by all four laws: `Kω` (diagonal, 1/s) and the attitude
/// stiffnesses `kr ≥ ky > 0` (1/s²), with `KR = diag(kr, kr, ky)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    k_omega: Vec3,
    k_r: f64,
    k_y: f64,
}

impl ControllerGains {
    pub fn new(k_omega: Vec3, k_r: f64, k_y: f64) -> Result<Self, ControlError> {
        for (name, value) in [
            ("k_omega[0]", k_omega.x),
            ("k_omega[1]", k_omega.y),
            ("k_omega[2]", k_omega.z),
            ("k_r", k_r),
            ("k_y", k_y),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ControlError::NonPositiveGain { name, value });
            }
        }
        if k_y > k_r {
            return Err(ControlError::YawGainExceedsTilt { k_r, k_y });
        }
        Ok(Self { k_omega, k_r, k_y })
    }

    /// Builds gains from full matrices. `Kω` must be diagonal and `KR` must be
    /// exactly `diag(kr, kr, ky)`.
    pub fn from_matrices(k_omega: &Mat3, k_attitude: &Mat3) -> Result<Self, ControlError> {
        let off_diagonal = |m: &Mat3| {
            (0..3).any(|i| (0..3).any(|j| i != j && m[(i, j)] != 0.0))
        };
        if off_diagonal(k_omega) {
            return Err(ControlError::NotDiagonal("k_omega"));
        }
        if off_diagonal(k_attitude) || k_attitude[(0, 0)] != k_attitude[(1, 1)] {
            return Err(ControlError::FreeFormAttitudeGain);
        }
        Self::new(k_omega.diagonal(), k_attitude[(0, 0)], k_attitude[(2, 2)])
    }

    pub fn k_omega(&self) -> &Vec3 {
        &self.k_omega
    }

    pub fn k_r(&self) -> f64 {
        self.k_r
    }

    pub fn k_y(&self) -> f64 {
        self.k_y
    }

    /// Diagonal of `KR = diag(kr, kr, ky)`.
    pub fn k_attitude(&self) -> Vec3 {
        Vec3::new(self.k_r, self.k_r, self.k_y)
    }

    fn damping(&self, omega_e: &Vec3) -> Vec3 {
        -self.k_omega.component_mul(omega_e)
    }
}

impl Default for ControllerGains {
    /// `kr = 4`, `ky = 1`, `Kω = √2·diag(2, 2, 1)`: natural frequencies of
    /// 2 rad/s (tilt) and 1 rad/s (yaw) at damping ratio √½.
    fn default() -> Self {
        Self {
            k_omega: std::f64::consts::SQRT_2 * Vec3::new(2.0, 2.0, 1.0),
            k_r: 4.0,
            k_y: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeErrorState {
    pub r_e: RotationMatrix,
    /// Error rate in the body frame of the actual attitude.
    pub omega_e: Vec3,
}

impl AttitudeErrorState {
    pub fn new(r_e: RotationMatrix, omega_e: Vec3) -> Self {
        Self { r_e, omega_e }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesiredAttitudeTrajectory {
    pub r_des: RotationMatrix,
    pub omega_des: Vec3,
    pub alpha_des: Vec3,
}

impl DesiredAttitudeTrajectory {
    /// A fixed setpoint: zero desired rate and acceleration.
    pub fn stationary(r_des: RotationMatrix) -> Self {
        Self {
            r_des,
            omega_des: Vec3::zeros(),
            alpha_des: Vec3::zeros(),
        }
    }
}

impl Default for DesiredAttitudeTrajectory {
    fn default() -> Self {
        Self::stationary(RotationMatrix::identity())
    }
}

/// Rigid-body parameters: inertia (kg·m²), mass (kg), gravity (m/s²).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodyParams {
    inertia: Mat3,
    mass: f64,
    gravity: Vec3,
}

impl BodyParams {
    pub fn new(inertia: Mat3, mass: f64, gravity: Vec3) -> Result<Self, ControlError> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(ControlError::BadMass(mass));
        }
        if (inertia - inertia.transpose()).abs().max() > 1e-12
            || !inertia.iter().all(|x| x.is_finite())
        {
            return Err(ControlError::BadInertia);
        }
        if inertia
            .symmetric_eigenvalues()
            .iter()
            .any(|&lambda| lambda <= 0.0)
        {
            return Err(ControlError::BadInertia);
        }
        Ok(Self {
            inertia,
            mass,
            gravity,
        })
    }

    pub fn inertia(&self) -> &Mat3 {
        &self.inertia
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn gravity(&self) -> &Vec3 {
        &self.gravity
    }
}

impl Default for BodyParams {
    /// A Crazyflie-class quadcopter: 28 g, inertia
    /// diag(16.6, 16.6, 29.3)·1e-6 kg·m², standard gravity along `−z`.
    ///
    /// These are assumed values; the attitude laws work in angular
    /// acceleration and never depend on them.
    fn default() -> Self {
        Self {
            inertia: Mat3::from_diagonal(&Vec3::new(16.6e-6, 16.6e-6, 29.3e-6)),
            mass: 0.028,
            gravity: Vec3::new(0.0, 0.0, -9.81),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ControllerKind {
    #[serde(rename = "SS")]
    SkewSymmetric,
    #[serde(rename = "RV")]
    RotationVector,
    #[serde(rename = "QTP")]
    QuaternionTiltPriority,
    #[serde(rename = "NEW")]
    ProportionalTiltPriority,
}

impl ControllerKind {
    pub const ALL: [ControllerKind; 4] = [
        ControllerKind::SkewSymmetric,
        ControllerKind::RotationVector,
        ControllerKind::QuaternionTiltPriority,
        ControllerKind::ProportionalTiltPriority,
    ];

    /// Short label used on the command line and in output file names.
    pub fn label(&self) -> &'static str {
        match self {
            ControllerKind::SkewSymmetric => "SS",
            ControllerKind::RotationVector => "RV",
            ControllerKind::QuaternionTiltPriority => "QTP",
            ControllerKind::ProportionalTiltPriority => "NEW",
        }
    }
}

impl fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ControllerKind {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SS" => Ok(ControllerKind::SkewSymmetric),
            "RV" => Ok(ControllerKind::RotationVector),
            "QTP" => Ok(ControllerKind::QuaternionTiltPriority),
            "NEW" => Ok(ControllerKind::ProportionalTiltPriority),
            _ => Err(ControlError::UnknownController(s.to_string())),
        }
    }
}

/// `Re = R_desᵀ·R`, `ωe = ω − Reᵀ·ω_des`.
pub fn error_kinematics(
    r: &RotationMatrix,
    omega: &Vec3,
    traj: &DesiredAttitudeTrajectory,
) -> AttitudeErrorState {
    let r_e = attitude_error(&traj.r_des, r);
    let omega_e = omega - r_e.inverse().rotate(&traj.omega_des);
    AttitudeErrorState { r_e, omega_e }
}

/// `−Kω·ωe − ½·KR·vee(Re − Reᵀ)`.
pub fn skew_symmetric_law(err: &AttitudeErrorState, gains: &ControllerGains) -> Vec3 {
    let sin_axis = vee_skew_part(err.r_e.matrix());
    gains.damping(&err.omega_e) - gains.k_attitude().component_mul(&sin_axis)
}

/// `−Kω·ωe − KR·ρe·ne`.
pub fn rotation_vector_law(err: &AttitudeErrorState, gains: &ControllerGains) -> Vec3 {
    let total = axis_angle_from_rot(&err.r_e);
    gains.damping(&err.omega_e) - gains.k_attitude().component_mul(&total.rotation_vector())
}

/// `−Kω·ωe − 2kr·sin(ρr/2)·nr − 2ky·sin(ρy/2)·ny`.
pub fn quaternion_tilt_priority_law(err: &AttitudeErrorState, gains: &ControllerGains) -> Vec3 {
    let red = reduced_decompose(&err.r_e);
    gains.damping(&err.omega_e)
        - 2.0 * gains.k_r() * (0.5 * red.tilt.angle).sin() * *red.tilt.axis
        - 2.0 * gains.k_y() * (0.5 * red.yaw.angle).sin() * *red.yaw.axis
}

/// `−Kω·ωe − ky·ρe·ne − (kr − ky)·ρr·nr`. Needs only the tilt part of the
/// decomposition.
pub fn proportional_tilt_priority_law(
    err: &AttitudeErrorState,
    gains: &ControllerGains,
) -> Vec3 {
    let total = axis_angle_from_rot(&err.r_e);
    let tilt = tilt_axis_angle(&err.r_e);
    gains.damping(&err.omega_e)
        - gains.k_y() * total.rotation_vector()
        - (gains.k_r() - gains.k_y()) * tilt.rotation_vector()
}

pub fn command(kind: ControllerKind, err: &AttitudeErrorState, gains: &ControllerGains) -> Vec3 {
    match kind {
        ControllerKind::SkewSymmetric => skew_symmetric_law(err, gains),
        ControllerKind::RotationVector => rotation_vector_law(err, gains),
        ControllerKind::QuaternionTiltPriority => quaternion_tilt_priority_law(err, gains),
        ControllerKind::ProportionalTiltPriority => proportional_tilt_priority_law(err, gains),
    }
}

/// Body torque realizing a commanded error acceleration.
///
/// Inverts `αe = α − Reᵀ·α_des + hat(ωe)·ω_des` for `α`, then applies Euler's
/// equation `τ = J·α + hat(ω)·J·ω`.
pub fn torque_from_command(
    alpha_e_des: &Vec3,
    err: &AttitudeErrorState,
    omega: &Vec3,
    traj: &DesiredAttitudeTrajectory,
    body: &BodyParams,
) -> Vec3 {
    let alpha = alpha_e_des + err.r_e.inverse().rotate(&traj.alpha_des)
        - hat(&err.omega_e) * traj.omega_des;
    body.inertia * alpha + hat(omega) * (body.inertia * omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::UnitVec3;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rot(axis: [f64; 3], angle: f64) -> RotationMatrix {
        RotationMatrix::from_axis_angle(&UnitVec3::normalize(Vec3::from(axis)).unwrap(), angle)
    }

    fn at_rest(r_e: RotationMatrix) -> AttitudeErrorState {
        AttitudeErrorState::new(r_e, Vec3::zeros())
    }

    #[test]
    fn gains_validation() {
        assert!(ControllerGains::new(Vec3::new(1.0, 1.0, 1.0), 4.0, 1.0).is_ok());
        assert!(ControllerGains::new(Vec3::new(1.0, 1.0, 1.0), 4.0, 4.0).is_ok());
        assert!(matches!(
            ControllerGains::new(Vec3::new(1.0, 1.0, 1.0), 1.0, 4.0),
            Err(ControlError::YawGainExceedsTilt { .. })
        ));
        assert!(ControllerGains::new(Vec3::new(1.0, 0.0, 1.0), 4.0, 1.0).is_err());
        assert!(ControllerGains::new(Vec3::new(1.0, 1.0, 1.0), f64::NAN, 1.0).is_err());
        assert!(ControllerGains::new(Vec3::new(1.0, 1.0, 1.0), 4.0, -1.0).is_err());
    }

    #[test]
    fn free_form_attitude_gain_rejected() {
        let kw = Mat3::from_diagonal(&Vec3::new(2.0, 2.0, 1.0));
        let ok = Mat3::from_diagonal(&Vec3::new(4.0, 4.0, 1.0));
        let g = ControllerGains::from_matrices(&kw, &ok).unwrap();
        assert_eq!(g.k_attitude(), Vec3::new(4.0, 4.0, 1.0));

        let unequal = Mat3::from_diagonal(&Vec3::new(4.0, 3.0, 1.0));
        assert_eq!(
            ControllerGains::from_matrices(&kw, &unequal),
            Err(ControlError::FreeFormAttitudeGain)
        );
        let mut coupled = ok;
        coupled[(0, 2)] = 0.1;
        assert!(ControllerGains::from_matrices(&kw, &coupled).is_err());
        let mut kw_coupled = kw;
        kw_coupled[(1, 0)] = 0.1;
        assert_eq!(
            ControllerGains::from_matrices(&kw_coupled, &ok),
            Err(ControlError::NotDiagonal("k_omega"))
        );
    }

    #[test]
    fn default_gains() {
        let g = ControllerGains::default();
        assert_eq!(g.k_r(), 4.0);
        assert_eq!(g.k_y(), 1.0);
        assert_abs_diff_eq!(
            *g.k_omega(),
            Vec3::new(2.0 * 2f64.sqrt(), 2.0 * 2f64.sqrt(), 2f64.sqrt())
        );
    }

    #[test]
    fn controller_kind_parsing() {
        for kind in ControllerKind::ALL {
            assert_eq!(kind.label().parse::<ControllerKind>().unwrap(), kind);
        }
        assert_eq!("new".parse::<ControllerKind>().unwrap(), ControllerKind::ProportionalTiltPriority);
        assert!("PID".parse::<ControllerKind>().is_err());
    }

    #[test]
    fn error_kinematics_cases() {
        let r = rot([0.3, 0.4, 0.5], 1.1);
        let w = Vec3::new(0.4, -0.2, 0.1);
        let traj = DesiredAttitudeTrajectory {
            r_des: r,
            omega_des: w,
            alpha_des: Vec3::zeros(),
        };
        let e = error_kinematics(&r, &w, &traj);
        assert_abs_diff_eq!(*e.r_e.matrix(), Mat3::identity(), epsilon = 1e-15);
        assert_abs_diff_eq!(e.omega_e, Vec3::zeros(), epsilon = 1e-15);

        let e = error_kinematics(&r, &w, &DesiredAttitudeTrajectory::default());
        assert_eq!(e.r_e, r);
        assert_eq!(e.omega_e, w);

        let traj = DesiredAttitudeTrajectory {
            r_des: rot([1.0, 0.0, 0.0], 0.1),
            omega_des: Vec3::new(0.5, 0.0, 0.0),
            alpha_des: Vec3::zeros(),
        };
        let e = error_kinematics(&rot([1.0, 0.0, 0.0], 0.3), &Vec3::new(1.0, 0.0, 0.0), &traj);
        assert_abs_diff_eq!(
            *e.r_e.matrix(),
            *rot([1.0, 0.0, 0.0], 0.2).matrix(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(e.omega_e, Vec3::new(0.5, 0.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn all_laws_vanish_at_equilibrium() {
        let g = ControllerGains::default();
        for kind in ControllerKind::ALL {
            assert_eq!(command(kind, &at_rest(RotationMatrix::identity()), &g), Vec3::zeros());
        }
    }

    #[test]
    fn skew_symmetric_quarter_turn() {
        let g = ControllerGains::default();
        let a = skew_symmetric_law(&at_rest(rot([1.0, 0.0, 0.0], FRAC_PI_2)), &g);
        assert_abs_diff_eq!(a, Vec3::new(-4.0, 0.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn skew_symmetric_vanishes_near_half_turn() {
        let g = ControllerGains::default();
        let a = skew_symmetric_law(&at_rest(rot([1.0, 0.0, 0.0], PI - 1e-4)), &g);
        assert!(a.norm() <= 4.0 * (PI - 1e-4f64).sin() + 1e-15);
        assert!(a.norm() < 4.1e-4);
    }

    #[test]
    fn rotation_vector_quarter_turn() {
        let g = ControllerGains::default();
        let a = rotation_vector_law(&at_rest(rot([1.0, 0.0, 0.0], FRAC_PI_2)), &g);
        assert_abs_diff_eq!(a, Vec3::new(-2.0 * PI, 0.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn rotation_vector_matches_skew_for_small_angles() {
        let g = ControllerGains::default();
        let e = at_rest(rot([1.0, 0.0, 0.0], 1e-5));
        let rv = rotation_vector_law(&e, &g);
        let ss = skew_symmetric_law(&e, &g);
        // relative difference is (ρ − sin ρ)/ρ ≈ ρ²/6 ≈ 1.7e-11
        let rel = (rv - ss).norm() / rv.norm();
        assert!((rel - 1e-10 / 6.0).abs() < 1e-12, "relative difference {rel:e}");
    }

    #[test]
    fn qtp_pure_yaw_and_pure_tilt() {
        let g = ControllerGains::default();
        let a = quaternion_tilt_priority_law(&at_rest(rot([0.0, 0.0, 1.0], 1.0)), &g);
        assert_abs_diff_eq!(a, Vec3::new(0.0, 0.0, -2.0 * 0.5f64.sin()), epsilon = 1e-14);
        let a = quaternion_tilt_priority_law(&at_rest(rot([1.0, 0.0, 0.0], 1.0)), &g);
        assert_abs_diff_eq!(a, Vec3::new(-8.0 * 0.5f64.sin(), 0.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn proportional_tilt_priority_pure_tilt() {
        let g = ControllerGains::default();
        let a = proportional_tilt_priority_law(&at_rest(rot([1.0, 0.0, 0.0], 1.0)), &g);
        assert_abs_diff_eq!(a, Vec3::new(-4.0, 0.0, 0.0), epsilon = 1e-14);
    }

    #[test]
    fn proportional_tilt_priority_reduces_to_rotation_vector() {
        let g = ControllerGains::new(Vec3::new(1.0, 2.0, 3.0), 2.5, 2.5).unwrap();
        let e = AttitudeErrorState::new(rot([0.3, -0.7, 0.2], 2.2), Vec3::new(0.1, 0.2, -0.3));
        assert_eq!(
            proportional_tilt_priority_law(&e, &g),
            rotation_vector_law(&e, &g)
        );
    }

    #[test]
    fn laws_agree_at_first_order() {
        let g = ControllerGains::default();
        let e = at_rest(rot([1.0, 0.0, 0.0], 1e-6));
        let outs: Vec<Vec3> = ControllerKind::ALL.iter().map(|&k| command(k, &e, &g)).collect();
        for a in &outs {
            for b in &outs {
                assert!((a - b).norm() < 1e-3 * a.norm());
            }
        }
    }

    #[test]
    fn hover_and_principal_spin_need_no_torque() {
        let body = BodyParams::default();
        let traj = DesiredAttitudeTrajectory::default();
        let e = at_rest(RotationMatrix::identity());
        assert_eq!(
            torque_from_command(&Vec3::zeros(), &e, &Vec3::zeros(), &traj, &body),
            Vec3::zeros()
        );
        let spin = Vec3::new(0.0, 0.0, 7.0);
        let e = AttitudeErrorState::new(RotationMatrix::identity(), spin);
        assert_eq!(
            torque_from_command(&Vec3::zeros(), &e, &spin, &traj, &body),
            Vec3::zeros()
        );
    }

    #[test]
    fn torque_by_direct_substitution() {
        // J = diag(1,2,3)e-3, ω = (1,1,0), αe = (0,0,1):
        // Jα = (0,0,3e-3); Jω = (1e-3, 2e-3, 0); ω × Jω = (0, 0, 1e-3)
        let body = BodyParams::new(
            Mat3::from_diagonal(&Vec3::new(1e-3, 2e-3, 3e-3)),
            1.0,
            Vec3::new(0.0, 0.0, -9.81),
        )
        .unwrap();
        let omega = Vec3::new(1.0, 1.0, 0.0);
        let e = AttitudeErrorState::new(RotationMatrix::identity(), omega);
        let tau = torque_from_command(
            &Vec3::new(0.0, 0.0, 1.0),
            &e,
            &omega,
            &DesiredAttitudeTrajectory::default(),
            &body,
        );
        assert_abs_diff_eq!(tau, Vec3::new(0.0, 0.0, 4e-3), epsilon = 1e-18);
    }

    #[test]
    fn torque_includes_trajectory_feedforward() {
        let body = BodyParams::new(Mat3::identity(), 1.0, Vec3::zeros()).unwrap();
        let r = rot([0.0, 0.0, 1.0], FRAC_PI_2);
        let traj = DesiredAttitudeTrajectory {
            r_des: RotationMatrix::identity(),
            omega_des: Vec3::zeros(),
            alpha_des: Vec3::new(1.0, 0.0, 0.0),
        };
        let e = error_kinematics(&r, &Vec3::zeros(), &traj);
        let tau = torque_from_command(&Vec3::zeros(), &e, &Vec3::zeros(), &traj, &body);
        // desired x-acceleration seen from a body yawed by +90° is along −y
        assert_abs_diff_eq!(tau, Vec3::new(0.0, -1.0, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn body_params_validation() {
        let g = Vec3::new(0.0, 0.0, -9.81);
        assert!(BodyParams::new(Mat3::identity(), 0.0, g).is_err());
        assert!(BodyParams::new(-Mat3::identity(), 1.0, g).is_err());
        let mut asym = Mat3::identity();
        asym[(0, 1)] = 0.1;
        assert!(BodyParams::new(asym, 1.0, g).is_err());
    }
}
