//! Closed-loop rigid-body simulation.
//!
//! The attitude subsystem is fully actuated: `Ṙ = R·hat(ω)`, `ω̇ = α`, with
//! `α` supplied by one of the control laws. Integration is a classical
//! four-stage Runge–Kutta scheme lifted to SO(3) (Munthe-Kaas form): every
//! stage moves the attitude multiplicatively through the exponential map and
//! the stage slopes are corrected by the truncated inverse differential of
//! `exp`, which keeps the scheme fourth order for non-planar motion as well.
//!
//! The optional translational loop is a position PD controller that turns a
//! desired acceleration into a thrust magnitude and the smallest rotation
//! pointing the thrust axis along it.

use thiserror::Error;

use crate::controllers::{
    command, error_kinematics, AttitudeErrorState, BodyParams, ControllerGains, ControllerKind,
    DesiredAttitudeTrajectory,
};
use crate::lyapunov::{self, LyapunovKind};
use crate::so3::{tilt_axis_angle, axis_angle_from_rot, RotationMatrix, UnitVec3, Vec3};

/// Default re-orthonormalization interval, in steps.
pub const DEFAULT_RENORM_INTERVAL: usize = 100;

// A desired specific force below this magnitude (m/s²) has no direction.
const FREE_FALL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("thrust must be non-negative, got {0}")]
    NegativeThrust(f64),
    #[error("simulation with {controller} diverged at t = {t} s")]
    DivergedState { controller: ControllerKind, t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttitudeState {
    pub r: RotationMatrix,
    /// Body-frame angular velocity, rad/s.
    pub omega: Vec3,
}

impl AttitudeState {
    pub fn new(r: RotationMatrix, omega: Vec3) -> Self {
        Self { r, omega }
    }

    fn is_finite(&self) -> bool {
        self.omega.iter().all(|x| x.is_finite()) && self.r.matrix().iter().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TranslationalState {
    /// Position, m.
    pub p: Vec3,
    /// Velocity, m/s.
    pub v: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionLoopGains {
    k_p: f64,
    k_v: f64,
}

impl PositionLoopGains {
    pub fn new(k_p: f64, k_v: f64) -> Result<Self, SimError> {
        if !(k_p > 0.0 && k_p.is_finite() && k_v > 0.0 && k_v.is_finite()) {
            return Err(SimError::InvalidConfig(format!(
                "position gains must be positive, got k_p = {k_p}, k_v = {k_v}"
            )));
        }
        Ok(Self { k_p, k_v })
    }

    pub fn k_p(&self) -> f64 {
        self.k_p
    }

    pub fn k_v(&self) -> f64 {
        self.k_v
    }
}

impl Default for PositionLoopGains {
    /// `kp = 0.5 s⁻²`, `kv = 1 s⁻¹`: a damping ratio of √½ at 0.71 rad/s,
    /// well inside the 2 rad/s attitude bandwidth of the default gains.
    fn default() -> Self {
        Self { k_p: 0.5, k_v: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    dt: f64,
    duration: f64,
    renorm_interval: usize,
}

impl SimConfig {
    pub fn new(dt: f64, duration: f64, renorm_interval: usize) -> Result<Self, SimError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SimError::InvalidConfig(format!("dt must be positive, got {dt}")));
        }
        if !(duration.is_finite() && duration >= dt) {
            return Err(SimError::InvalidConfig(format!(
                "duration {duration} must be at least dt {dt}"
            )));
        }
        if renorm_interval == 0 {
            return Err(SimError::InvalidConfig("renorm_interval must be at least 1".into()));
        }
        Ok(Self {
            dt,
            duration,
            renorm_interval,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn renorm_interval(&self) -> usize {
        self.renorm_interval
    }

    /// `floor(duration / dt)`, tolerant of round-off in the quotient.
    pub fn steps(&self) -> usize {
        (self.duration / self.dt + 1e-9).floor() as usize
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            duration: 15.0,
            renorm_interval: DEFAULT_RENORM_INTERVAL,
        }
    }
}

/// One sample of a closed-loop run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: f64,
    pub state: AttitudeState,
    pub error: AttitudeErrorState,
    pub rho_e: f64,
    pub rho_r: f64,
    pub rho_y: f64,
    /// Commanded error acceleration `αe,des` (body frame).
    pub command: Vec3,
    /// `|αe,des · e3|`.
    pub command_parallel: f64,
    /// `‖αe,des − (αe,des · e3)·e3‖`.
    pub command_perpendicular: f64,
    /// Lyapunov function of the running controller, when it has one.
    pub lyapunov: Option<f64>,
    pub translation: Option<TranslationalState>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTrace {
    pub controller: ControllerKind,
    pub gains: ControllerGains,
    pub dt: f64,
    pub records: Vec<TraceRecord>,
}

impl SimTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn lyapunov_kind(&self) -> Option<LyapunovKind> {
        LyapunovKind::for_controller(self.controller)
    }
}

/// `a = R·e3·thrust/m + g`.
pub fn translational_accel(
    r: &RotationMatrix,
    thrust: f64,
    body: &BodyParams,
) -> Result<Vec3, SimError> {
    if !(thrust >= 0.0) {
        return Err(SimError::NegativeThrust(thrust));
    }
    Ok(r.rotate(&Vec3::z()) * (thrust / body.mass()) + body.gravity())
}

// dexp⁻¹ for the right-trivialized exponential, truncated after the
// second-order term (sufficient for a fourth-order method).
fn dexp_inv(theta: &Vec3, omega: &Vec3) -> Vec3 {
    let c = theta.cross(omega);
    omega + 0.5 * c + theta.cross(&c) / 12.0
}

#[derive(Clone, Copy)]
struct Slope {
    theta: Vec3,
    alpha: Vec3,
    velocity: Vec3,
    accel: Vec3,
}

/// One Runge–Kutta–Munthe-Kaas step of `dt` for the attitude under a
/// state-feedback acceleration `accel(R, ω)`.
///
/// No re-orthonormalization is applied here.
pub fn integrate_step<F>(state: &AttitudeState, dt: f64, mut accel: F) -> AttitudeState
where
    F: FnMut(&RotationMatrix, &Vec3) -> Vec3,
{
    let (next, _) = integrate_coupled(state, None, dt, |r, w| (accel(r, w), Vec3::zeros()));
    next
}

// Attitude and (optionally) translation advanced with shared stages. `f`
// returns the angular acceleration and the translational acceleration.
fn integrate_coupled<F>(
    state: &AttitudeState,
    trans: Option<&TranslationalState>,
    dt: f64,
    mut f: F,
) -> (AttitudeState, Option<TranslationalState>)
where
    F: FnMut(&RotationMatrix, &Vec3) -> (Vec3, Vec3),
{
    let r0 = state.r;
    let w0 = state.omega;
    let (p0, v0) = trans.map_or((Vec3::zeros(), Vec3::zeros()), |t| (t.p, t.v));

    let eval = |f: &mut F, theta: Vec3, w: Vec3, v: Vec3| {
        let r = r0.compose(&RotationMatrix::exp(&theta));
        let (alpha, accel) = f(&r, &w);
        Slope {
            theta: dexp_inv(&theta, &w),
            alpha,
            velocity: v,
            accel,
        }
    };

    let k1 = eval(&mut f, Vec3::zeros(), w0, v0);
    let k2 = eval(
        &mut f,
        0.5 * dt * k1.theta,
        w0 + 0.5 * dt * k1.alpha,
        v0 + 0.5 * dt * k1.accel,
    );
    let k3 = eval(
        &mut f,
        0.5 * dt * k2.theta,
        w0 + 0.5 * dt * k2.alpha,
        v0 + 0.5 * dt * k2.accel,
    );
    let k4 = eval(&mut f, dt * k3.theta, w0 + dt * k3.alpha, v0 + dt * k3.accel);

    let avg = |a: Vec3, b: Vec3, c: Vec3, d: Vec3| (a + 2.0 * b + 2.0 * c + d) / 6.0;
    let theta = dt * avg(k1.theta, k2.theta, k3.theta, k4.theta);
    let next = AttitudeState {
        r: r0.compose(&RotationMatrix::exp(&theta)),
        omega: w0 + dt * avg(k1.alpha, k2.alpha, k3.alpha, k4.alpha),
    };
    let next_trans = trans.map(|_| TranslationalState {
        p: p0 + dt * avg(k1.velocity, k2.velocity, k3.velocity, k4.velocity),
        v: v0 + dt * avg(k1.accel, k2.accel, k3.accel, k4.accel),
    });
    (next, next_trans)
}

/// One closed-loop step under `controller` tracking `traj`.
///
/// Does not re-orthonormalize; [`simulate`] does that every
/// `renorm_interval` steps.
pub fn step(
    state: &AttitudeState,
    controller: ControllerKind,
    gains: &ControllerGains,
    traj: &DesiredAttitudeTrajectory,
    cfg: &SimConfig,
) -> AttitudeState {
    integrate_step(state, cfg.dt, |r, w| {
        command(controller, &error_kinematics(r, w, traj), gains)
    })
}

fn record(
    t: f64,
    state: &AttitudeState,
    controller: ControllerKind,
    gains: &ControllerGains,
    traj: &DesiredAttitudeTrajectory,
    translation: Option<TranslationalState>,
) -> TraceRecord {
    let error = error_kinematics(&state.r, &state.omega, traj);
    let cmd = command(controller, &error, gains);
    let rho_e = axis_angle_from_rot(&error.r_e).angle;
    let rho_r = tilt_axis_angle(&error.r_e).angle;
    let rho_y = crate::so3::reduced_decompose(&error.r_e).yaw.angle;
    let lyapunov =
        LyapunovKind::for_controller(controller).map(|k| lyapunov::evaluate(k, &error, gains));
    TraceRecord {
        t,
        state: *state,
        error,
        rho_e,
        rho_r,
        rho_y,
        command: cmd,
        command_parallel: cmd.z.abs(),
        command_perpendicular: cmd.x.hypot(cmd.y),
        lyapunov,
        translation,
    }
}

/// Runs the attitude loop for `cfg.duration()` and records every step.
pub fn simulate(
    initial: &AttitudeState,
    controller: ControllerKind,
    gains: &ControllerGains,
    traj: &DesiredAttitudeTrajectory,
    cfg: &SimConfig,
) -> Result<SimTrace, SimError> {
    let steps = cfg.steps();
    let mut records = Vec::with_capacity(steps + 1);
    let mut state = *initial;
    records.push(record(0.0, &state, controller, gains, traj, None));
    for k in 1..=steps {
        state = step(&state, controller, gains, traj, cfg);
        if k % cfg.renorm_interval == 0 {
            state.r = state.r.orthonormalized();
        }
        let t = k as f64 * cfg.dt;
        if !state.is_finite() {
            return Err(SimError::DivergedState { controller, t });
        }
        records.push(record(t, &state, controller, gains, traj, None));
    }
    Ok(SimTrace {
        controller,
        gains: *gains,
        dt: cfg.dt,
        records,
    })
}

/// Position PD loop producing an attitude setpoint and a thrust.
///
/// `a_des = −kp·(p − p_des) − kv·v`, `f = m·(a_des − g)`, thrust `‖f‖`, and
/// `R_des` the smallest rotation taking `e3` onto `f/‖f‖`. Rates of `R_des`
/// are not fed forward. When `f` vanishes the previous setpoint (identity if
/// none) is held and the thrust is zero.
pub fn position_loop(
    trans: &TranslationalState,
    p_des: &Vec3,
    gains: &PositionLoopGains,
    body: &BodyParams,
    previous: Option<&RotationMatrix>,
) -> (DesiredAttitudeTrajectory, f64) {
    let a_des = -gains.k_p * (trans.p - p_des) - gains.k_v * trans.v;
    let specific = a_des - body.gravity();
    let norm = specific.norm();
    if !(norm > FREE_FALL_TOLERANCE) {
        let held = previous.copied().unwrap_or_else(RotationMatrix::identity);
        return (DesiredAttitudeTrajectory::stationary(held), 0.0);
    }
    let dir = specific / norm;
    let axis = Vec3::z().cross(&dir);
    let sin_angle = axis.norm();
    let angle = sin_angle.atan2(dir.z);
    let r_des = if sin_angle > 0.0 {
        RotationMatrix::from_axis_angle(&UnitVec3::new_unchecked(axis / sin_angle), angle)
    } else if dir.z > 0.0 {
        RotationMatrix::identity()
    } else {
        RotationMatrix::from_axis_angle(&UnitVec3::E1, angle)
    };
    (DesiredAttitudeTrajectory::stationary(r_des), body.mass() * norm)
}

/// Everything a cascaded position/attitude run needs besides the controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadedSetup {
    pub attitude: AttitudeState,
    pub translation: TranslationalState,
    pub p_des: Vec3,
    pub gains: ControllerGains,
    pub position_gains: PositionLoopGains,
    pub body: BodyParams,
}

/// Cascaded flight: each step the position loop produces `(R_des, thrust)`,
/// held constant over the step, and attitude and translation are advanced
/// together.
pub fn simulate_cascaded(
    setup: &CascadedSetup,
    controller: ControllerKind,
    cfg: &SimConfig,
) -> Result<SimTrace, SimError> {
    let gains = &setup.gains;
    let body = &setup.body;
    let steps = cfg.steps();
    let mut records = Vec::with_capacity(steps + 1);
    let mut att = setup.attitude;
    let mut trans = setup.translation;

    let (mut traj, mut thrust) =
        position_loop(&trans, &setup.p_des, &setup.position_gains, body, None);
    records.push(record(0.0, &att, controller, gains, &traj, Some(trans)));
    for k in 1..=steps {
        let (next_att, next_trans) = integrate_coupled(&att, Some(&trans), cfg.dt, |r, w| {
            let alpha = command(controller, &error_kinematics(r, w, &traj), gains);
            let accel = r.rotate(&Vec3::z()) * (thrust / body.mass()) + body.gravity();
            (alpha, accel)
        });
        att = next_att;
        trans = next_trans.unwrap_or(trans);
        if k % cfg.renorm_interval == 0 {
            att.r = att.r.orthonormalized();
        }
        let t = k as f64 * cfg.dt;
        let finite = trans.p.iter().chain(trans.v.iter()).all(|x| x.is_finite());
        if !att.is_finite() || !finite {
            return Err(SimError::DivergedState { controller, t });
        }
        let (next_traj, next_thrust) = position_loop(
            &trans,
            &setup.p_des,
            &setup.position_gains,
            body,
            Some(&traj.r_des),
        );
        traj = next_traj;
        thrust = next_thrust;
        records.push(record(t, &att, controller, gains, &traj, Some(trans)));
    }
    Ok(SimTrace {
        controller,
        gains: *gains,
        dt: cfg.dt,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn rot(axis: [f64; 3], angle: f64) -> RotationMatrix {
        RotationMatrix::from_axis_angle(&UnitVec3::normalize(Vec3::from(axis)).unwrap(), angle)
    }

    fn hover_body(mass: f64) -> BodyParams {
        BodyParams::new(
            crate::so3::Mat3::identity() * 1e-3,
            mass,
            Vec3::new(0.0, 0.0, -9.81),
        )
        .unwrap()
    }

    #[test]
    fn translational_accel_cases() {
        let body = hover_body(0.5);
        let a = translational_accel(&RotationMatrix::identity(), 0.5 * 9.81, &body).unwrap();
        assert_abs_diff_eq!(a, Vec3::zeros(), epsilon = 1e-15);
        let a = translational_accel(&rot([0.3, 0.2, 0.1], 1.0), 0.0, &body).unwrap();
        assert_eq!(a, *body.gravity());

        let unit = hover_body(1.0);
        let r = rot([1.0, 0.0, 0.0], PI / 3.0);
        let a = translational_accel(&r, 2.0, &unit).unwrap();
        assert_abs_diff_eq!(a, 2.0 * (r * Vec3::z()) + unit.gravity(), epsilon = 1e-15);

        assert_eq!(
            translational_accel(&r, -1.0, &unit),
            Err(SimError::NegativeThrust(-1.0))
        );
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0.0, 1.0, 1).is_err());
        assert!(SimConfig::new(0.1, 0.01, 1).is_err());
        assert!(SimConfig::new(0.1, 1.0, 0).is_err());
        assert_eq!(SimConfig::new(1e-3, 15.0, 100).unwrap().steps(), 15000);
        assert_eq!(SimConfig::new(0.3, 1.0, 100).unwrap().steps(), 3);
        assert!(PositionLoopGains::new(0.0, 1.0).is_err());
    }

    #[test]
    fn zero_command_at_rest_is_stationary() {
        let s = AttitudeState::new(rot([1.0, 2.0, 3.0], 0.4), Vec3::zeros());
        let next = integrate_step(&s, 1e-3, |_, _| Vec3::zeros());
        assert_eq!(next, s);
    }

    #[test]
    fn constant_rate_matches_exact_rotation() {
        let w = 1.7;
        let r0 = rot([0.2, -0.1, 0.4], 0.9);
        let mut s = AttitudeState::new(r0, Vec3::new(w, 0.0, 0.0));
        for _ in 0..1000 {
            s = integrate_step(&s, 1e-3, |_, _| Vec3::zeros());
        }
        let exact = r0 * rot([1.0, 0.0, 0.0], w);
        assert_abs_diff_eq!(*s.r.matrix(), *exact.matrix(), epsilon = 1e-8);
        assert_eq!(s.omega, Vec3::new(w, 0.0, 0.0));
    }

    #[test]
    fn equilibrium_stays_put() {
        let cfg = SimConfig::new(1e-3, 1.0, 100).unwrap();
        let init = AttitudeState::new(RotationMatrix::identity(), Vec3::zeros());
        for kind in ControllerKind::ALL {
            let trace = simulate(
                &init,
                kind,
                &ControllerGains::default(),
                &DesiredAttitudeTrajectory::default(),
                &cfg,
            )
            .unwrap();
            assert_eq!(trace.records.len(), 1001);
            assert!(trace.records.iter().all(|r| r.rho_e == 0.0));
        }
    }

    #[test]
    fn records_are_time_ordered() {
        let cfg = SimConfig::new(0.01, 0.5, 7).unwrap();
        let init = AttitudeState::new(rot([0.0, 1.0, 0.0], 0.5), Vec3::new(0.0, 0.0, 1.0));
        let trace = simulate(
            &init,
            ControllerKind::QuaternionTiltPriority,
            &ControllerGains::default(),
            &DesiredAttitudeTrajectory::default(),
            &cfg,
        )
        .unwrap();
        assert_eq!(trace.records.len(), 51);
        assert!(trace.records.windows(2).all(|w| w[1].t > w[0].t));
        assert!(trace.records.iter().all(|r| r.lyapunov.is_none()));
    }

    #[test]
    fn divergence_is_reported() {
        let cfg = SimConfig::new(0.01, 0.5, 100).unwrap();
        let init = AttitudeState::new(RotationMatrix::identity(), Vec3::new(f64::NAN, 0.0, 0.0));
        let err = simulate(
            &init,
            ControllerKind::RotationVector,
            &ControllerGains::default(),
            &DesiredAttitudeTrajectory::default(),
            &cfg,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::DivergedState { controller: ControllerKind::RotationVector, .. }));
    }

    #[test]
    fn position_loop_at_setpoint_hovers() {
        let body = hover_body(0.7);
        let trans = TranslationalState {
            p: Vec3::new(1.0, 2.0, 3.0),
            v: Vec3::zeros(),
        };
        let (traj, thrust) =
            position_loop(&trans, &trans.p, &PositionLoopGains::default(), &body, None);
        assert_eq!(traj.r_des, RotationMatrix::identity());
        assert_abs_diff_eq!(thrust, 0.7 * 9.81, epsilon = 1e-12);
        assert_eq!(traj.omega_des, Vec3::zeros());
    }

    #[test]
    fn position_loop_tilts_toward_setpoint() {
        let body = hover_body(1.0);
        let gains = PositionLoopGains::new(2.0, 1.0).unwrap();
        let trans = TranslationalState {
            p: Vec3::new(1.0, 0.0, 0.0),
            v: Vec3::zeros(),
        };
        let (traj, thrust) = position_loop(&trans, &Vec3::zeros(), &gains, &body, None);
        let f = Vec3::new(-2.0, 0.0, 9.81);
        assert_abs_diff_eq!(thrust, f.norm(), epsilon = 1e-12);
        assert_abs_diff_eq!(traj.r_des * Vec3::z(), f.normalize(), epsilon = 1e-15);
        // smallest rotation: axis is e3 × f̂ = −e2 direction, no yaw
        let aa = axis_angle_from_rot(&traj.r_des);
        assert_abs_diff_eq!(*aa.axis, -Vec3::y(), epsilon = 1e-15);
        assert_abs_diff_eq!(aa.angle, (2.0f64 / 9.81).atan(), epsilon = 1e-15);
    }

    #[test]
    fn position_loop_free_fall_holds_previous() {
        let body = hover_body(1.0);
        let gains = PositionLoopGains::new(1.0, 1.0).unwrap();
        // a_des = g exactly: p − p_des = (0, 0, 9.81)
        let trans = TranslationalState {
            p: Vec3::new(0.0, 0.0, 9.81),
            v: Vec3::zeros(),
        };
        let prev = rot([0.0, 1.0, 0.0], 0.3);
        let (traj, thrust) = position_loop(&trans, &Vec3::zeros(), &gains, &body, Some(&prev));
        assert_eq!(thrust, 0.0);
        assert_eq!(traj.r_des, prev);
        let (traj, _) = position_loop(&trans, &Vec3::zeros(), &gains, &body, None);
        assert_eq!(traj.r_des, RotationMatrix::identity());
    }

    #[test]
    fn cascaded_hover_stays_at_setpoint() {
        let setup = CascadedSetup {
            attitude: AttitudeState::new(RotationMatrix::identity(), Vec3::zeros()),
            translation: TranslationalState {
                p: Vec3::new(0.0, 0.0, 1.5),
                v: Vec3::zeros(),
            },
            p_des: Vec3::new(0.0, 0.0, 1.5),
            gains: ControllerGains::default(),
            position_gains: PositionLoopGains::default(),
            body: BodyParams::default(),
        };
        let cfg = SimConfig::new(1e-3, 2.0, 100).unwrap();
        let trace =
            simulate_cascaded(&setup, ControllerKind::ProportionalTiltPriority, &cfg).unwrap();
        for rec in &trace.records {
            let p = rec.translation.unwrap().p;
            assert!((p - setup.p_des).norm() < 1e-6);
        }
    }
}
