//! Lyapunov functions for the SS, RV and proportional tilt-priority laws, and
//! checks that they decrease along simulated trajectories.
//!
//! The quaternion tilt-priority law has no evaluator here.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controllers::{AttitudeErrorState, ControllerGains, ControllerKind};
use crate::dynamics::SimTrace;
use crate::so3::{axis_angle_from_rot, tilt_axis_angle, Vec3};

/// Absolute part of the per-step descent tolerance.
pub const DESCENT_ABS_TOL: f64 = 1e-9;
/// Relative part of the per-step descent tolerance.
pub const DESCENT_REL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LyapunovKind {
    SS,
    RV,
    New,
}

impl LyapunovKind {
    /// The function certifying `kind`, if there is one.
    pub fn for_controller(kind: ControllerKind) -> Option<LyapunovKind> {
        match kind {
            ControllerKind::SkewSymmetric => Some(LyapunovKind::SS),
            ControllerKind::RotationVector => Some(LyapunovKind::RV),
            ControllerKind::ProportionalTiltPriority => Some(LyapunovKind::New),
            ControllerKind::QuaternionTiltPriority => None,
        }
    }

    pub fn controller(&self) -> ControllerKind {
        match self {
            LyapunovKind::SS => ControllerKind::SkewSymmetric,
            LyapunovKind::RV => ControllerKind::RotationVector,
            LyapunovKind::New => ControllerKind::ProportionalTiltPriority,
        }
    }
}

impl fmt::Display for LyapunovKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LyapunovKind::SS => "J_SS",
            LyapunovKind::RV => "J_RV",
            LyapunovKind::New => "J_New",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LyapunovError {
    #[error("{kind} certifies {expected}, but the trace was produced by {found}")]
    MismatchedController {
        kind: LyapunovKind,
        expected: ControllerKind,
        found: ControllerKind,
    },
}

fn rate_energy(omega_e: &Vec3, gains: &ControllerGains) -> f64 {
    0.5 * omega_e.component_div(&gains.k_attitude()).dot(omega_e)
}

/// `½·ωeᵀ·KR⁻¹·ωe + (1 − cos ρe)`, with `1 − cos ρe = (3 − tr Re)/2`.
pub fn j_ss(err: &AttitudeErrorState, gains: &ControllerGains) -> f64 {
    rate_energy(&err.omega_e, gains) + 0.5 * (3.0 - err.r_e.trace())
}

/// `½·ωeᵀ·KR⁻¹·ωe + ½·ρe²`.
pub fn j_rv(err: &AttitudeErrorState, gains: &ControllerGains) -> f64 {
    let rho = axis_angle_from_rot(&err.r_e).angle;
    rate_energy(&err.omega_e, gains) + 0.5 * rho * rho
}

/// `½·ωeᵀ·ωe + ½·ky·ρe² + ½·(kr − ky)·ρr²`.
pub fn j_new(err: &AttitudeErrorState, gains: &ControllerGains) -> f64 {
    let rho = axis_angle_from_rot(&err.r_e).angle;
    let rho_r = tilt_axis_angle(&err.r_e).angle;
    0.5 * err.omega_e.dot(&err.omega_e)
        + 0.5 * gains.k_y() * rho * rho
        + 0.5 * (gains.k_r() - gains.k_y()) * rho_r * rho_r
}

pub fn evaluate(kind: LyapunovKind, err: &AttitudeErrorState, gains: &ControllerGains) -> f64 {
    match kind {
        LyapunovKind::SS => j_ss(err, gains),
        LyapunovKind::RV => j_rv(err, gains),
        LyapunovKind::New => j_new(err, gains),
    }
}

/// Diagonal of the dissipation weight `M` in `dJ/dt = −ωeᵀ·M·ωe` under the
/// matching law: `KR⁻¹·Kω` for SS and RV, `Kω` for New.
pub fn dissipation_weight(kind: LyapunovKind, gains: &ControllerGains) -> Vec3 {
    match kind {
        LyapunovKind::SS | LyapunovKind::RV => gains.k_omega().component_div(&gains.k_attitude()),
        LyapunovKind::New => *gains.k_omega(),
    }
}

/// Closed-loop `dJ/dt = −ωeᵀ·M·ωe`.
pub fn analytic_rate(kind: LyapunovKind, omega_e: &Vec3, gains: &ControllerGains) -> f64 {
    -dissipation_weight(kind, gains).component_mul(omega_e).dot(omega_e)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentReport {
    /// Largest `J(t_{k+1}) − J(t_k)` over the trace (0 if J never increases).
    pub max_increase: f64,
    /// Largest increase in excess of the allowed tolerance, or 0.
    pub max_excess: f64,
    pub monotone: bool,
}

/// Checks `J(t_{k+1}) − J(t_k) ≤ 1e-9 + 1e-6·J(t_k)` along the trace.
pub fn check_descent(trace: &SimTrace, kind: LyapunovKind) -> Result<DescentReport, LyapunovError> {
    ensure_matching(trace, kind)?;
    let values: Vec<f64> = trace
        .records
        .iter()
        .map(|rec| evaluate(kind, &rec.error, &trace.gains))
        .collect();
    let mut max_increase = 0.0f64;
    let mut max_excess = 0.0f64;
    for w in values.windows(2) {
        let inc = w[1] - w[0];
        max_increase = max_increase.max(inc);
        let allowed = DESCENT_ABS_TOL + DESCENT_REL_TOL * w[0].abs();
        max_excess = max_excess.max(inc - allowed);
    }
    Ok(DescentReport {
        max_increase,
        max_excess,
        monotone: max_excess <= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Worst `|FD − analytic| / max(1e-4, 1e-2·|analytic|)`; at most 1 passes.
    pub worst_ratio: f64,
    /// Time of the worst sample.
    pub worst_t: f64,
    pub max_abs_error: f64,
    pub consistent: bool,
}

/// Compares the central finite difference of `J` along the trace with the
/// analytic rate `−ωeᵀ·M·ωe` at every interior record.
///
/// A sample passes when the two agree within `max(1e-4, 1 %·|analytic|)`.
pub fn check_rate(trace: &SimTrace, kind: LyapunovKind) -> Result<RateReport, LyapunovError> {
    ensure_matching(trace, kind)?;
    let recs = &trace.records;
    let values: Vec<f64> = recs
        .iter()
        .map(|rec| evaluate(kind, &rec.error, &trace.gains))
        .collect();
    let mut report = RateReport {
        worst_ratio: 0.0,
        worst_t: 0.0,
        max_abs_error: 0.0,
        consistent: true,
    };
    for k in 1..recs.len().saturating_sub(1) {
        let h = recs[k + 1].t - recs[k - 1].t;
        let numeric = (values[k + 1] - values[k - 1]) / h;
        let analytic = analytic_rate(kind, &recs[k].error.omega_e, &trace.gains);
        let abs_err = (numeric - analytic).abs();
        let ratio = abs_err / (1e-4f64).max(1e-2 * analytic.abs());
        report.max_abs_error = report.max_abs_error.max(abs_err);
        if ratio > report.worst_ratio {
            report.worst_ratio = ratio;
            report.worst_t = recs[k].t;
        }
    }
    report.consistent = report.worst_ratio <= 1.0;
    Ok(report)
}

fn ensure_matching(trace: &SimTrace, kind: LyapunovKind) -> Result<(), LyapunovError> {
    if trace.controller != kind.controller() {
        return Err(LyapunovError::MismatchedController {
            kind,
            expected: kind.controller(),
            found: trace.controller,
        });
    }
    Ok(())
}
