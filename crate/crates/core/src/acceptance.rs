//! The acceptance battery: ten numbered criteria, each producing a pass/fail
//! outcome with a one-line explanation.
//!
//! Random inputs come from fixed seeds, so every run checks the same samples.

use std::fmt;
use std::time::{Duration, Instant};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::controllers::{command, AttitudeErrorState, ControllerGains, ControllerKind};
use crate::dynamics::SimTrace;
use crate::lyapunov::{check_descent, check_rate, LyapunovKind};
use crate::reference::{reference_run, Quat, ReferenceGains, ReferenceState};
use crate::scenario::{self, preset, settle_time, Setpoint};
use crate::so3::{
    axis_angle_from_rot, hat, reduced_decompose, rot_from_axis_angle, vee, AxisAngle,
    RotationMatrix, UnitVec3, Vec3,
};

/// Longest contiguous stretch of the skew-symmetric law above 170° in the
/// spinning scenario, from the quaternion oracle at dt = 1e-6 s.
pub const ORACLE_SS_LINGER_WINDOW_S: f64 = 2.21218;
/// Final drop below 90° in the spinning scenario, same oracle.
pub const ORACLE_SS_BELOW_90_S: f64 = 5.24914;
pub const ORACLE_RV_BELOW_90_S: f64 = 1.11818;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {:>2} {}: {}", self.id, self.name, self.detail)
    }
}

struct Checks {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Self {
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn finish(self, id: u8, name: &'static str) -> CriterionOutcome {
        let passed = self.failures.is_empty();
        let detail = if passed {
            self.notes.join("; ")
        } else {
            format!("failed: {}", self.failures.join("; "))
        };
        CriterionOutcome {
            id,
            name,
            passed,
            detail,
        }
    }
}

fn random_unit(rng: &mut StdRng) -> UnitVec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return UnitVec3::normalize(v).expect("nonzero");
        }
    }
}

fn random_rotation(rng: &mut StdRng) -> RotationMatrix {
    let axis = random_unit(rng);
    RotationMatrix::from_axis_angle(&axis, rng.gen_range(0.0..std::f64::consts::PI))
}

fn random_vec(rng: &mut StdRng, scale: f64) -> Vec3 {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

fn max_abs(m: &crate::so3::Mat3) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Rotation algebra: hat/vee, composition drift, adjoint identity, axis-angle
/// roundtrip.
pub fn criterion_1() -> CriterionOutcome {
    let started = Instant::now();
    let mut rng = StdRng::seed_from_u64(1);
    let mut c = Checks::new();

    let exact = (0..1000).all(|_| {
        let v = random_vec(&mut rng, 10.0);
        vee(&hat(&v)) == Ok(v)
    });
    c.check(exact, "hat/vee roundtrip exact on 1000 vectors".into());

    let mut r = RotationMatrix::identity();
    for k in 1..=100_000 {
        r = r * random_rotation(&mut rng);
        if k % 100 == 0 {
            r = r.orthonormalized();
        }
    }
    let ortho = r.orthonormality_residual();
    let det_err = (r.matrix().determinant() - 1.0).abs();
    c.check(
        ortho <= 1e-9 && det_err <= 1e-9,
        format!("after 1e5 compositions |RᵀR−I|={ortho:.1e}, |det−1|={det_err:.1e}"),
    );

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let r = random_rotation(&mut rng);
        let x = random_vec(&mut rng, 1.0);
        let lhs = hat(&r.rotate(&x));
        let rhs = r.matrix() * hat(&x) * r.matrix().transpose();
        worst = worst.max(max_abs(&(lhs - rhs)));
    }
    c.check(worst <= 1e-12, format!("hat(Rx) vs R·hat(x)·Rᵀ max {worst:.1e}"));

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let axis = random_unit(&mut rng);
        let angle = rng.gen_range(0.01..std::f64::consts::PI - 0.01);
        let back = axis_angle_from_rot(&rot_from_axis_angle(&AxisAngle { axis, angle }));
        worst = worst
            .max((back.angle - angle).abs())
            .max((*back.axis - *axis).norm());
    }
    c.check(worst <= 1e-7, format!("axis-angle roundtrip max {worst:.1e}"));

    let elapsed = started.elapsed();
    c.check(
        elapsed < Duration::from_secs(10),
        format!("runtime {:.2} s", elapsed.as_secs_f64()),
    );
    c.finish(1, "rotation algebra")
}

/// Reduced-attitude decomposition on random rotations.
pub fn criterion_2() -> CriterionOutcome {
    let mut rng = StdRng::seed_from_u64(2);
    let mut recompose = 0.0f64;
    let mut axis_e3 = 0.0f64;
    let mut half_angle = 0.0f64;
    let mut ordered = true;
    for _ in 0..1000 {
        let re = random_rotation(&mut rng);
        let d = reduced_decompose(&re);
        recompose = recompose.max(max_abs(&((d.r_yaw * d.r_tilt).into_inner() - re.matrix())));
        axis_e3 = axis_e3.max(d.tilt.axis.z.abs());
        let rho_e = axis_angle_from_rot(&re).angle;
        let lhs = (0.5 * rho_e).cos();
        let rhs = (0.5 * d.tilt.angle).cos() * (0.5 * d.yaw.angle).cos();
        half_angle = half_angle.max((lhs - rhs).abs());
        ordered &= d.tilt.angle <= rho_e + 1e-12;
    }
    let mut c = Checks::new();
    c.check(recompose <= 1e-9, format!("|Ry·Rr − Re| max {recompose:.1e}"));
    c.check(axis_e3 <= 1e-9, format!("|nr·e3| max {axis_e3:.1e}"));
    c.check(
        half_angle <= 1e-9,
        format!("cos(ρe/2) vs cos(ρr/2)·cos(ρy/2) max {half_angle:.1e}"),
    );
    c.check(ordered, "ρr ≤ ρe on all samples".into());
    c.finish(2, "reduced attitude")
}

/// All four laws agree to first order for small errors at rest.
pub fn criterion_3() -> CriterionOutcome {
    let mut rng = StdRng::seed_from_u64(3);
    let gains = ControllerGains::default();
    let eps = 1e-4;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let axis = random_unit(&mut rng);
        let err = AttitudeErrorState::new(RotationMatrix::from_axis_angle(&axis, eps), Vec3::zeros());
        let cmds: Vec<Vec3> = ControllerKind::ALL
            .iter()
            .map(|&k| command(k, &err, &gains))
            .collect();
        for i in 0..cmds.len() {
            for j in i + 1..cmds.len() {
                worst = worst.max((cmds[i] - cmds[j]).norm());
            }
        }
    }
    let bound = 10.0 * eps * eps;
    let mut c = Checks::new();
    c.check(
        worst <= bound,
        format!("max pairwise difference {worst:.2e} (bound {bound:.0e})"),
    );
    c.finish(3, "first-order equivalence")
}

/// NEW reduces to RV when ky = kr, and for pure-tilt errors.
pub fn criterion_4() -> CriterionOutcome {
    let mut rng = StdRng::seed_from_u64(4);
    let tol = |a: &Vec3| 64.0 * f64::EPSILON * a.norm().max(1.0);

    let mut equal_gains = true;
    let mut worst_equal = 0.0f64;
    for _ in 0..1000 {
        let k = rng.gen_range(0.5..10.0);
        let k_omega = Vec3::new(
            rng.gen_range(0.5..5.0),
            rng.gen_range(0.5..5.0),
            rng.gen_range(0.5..5.0),
        );
        let gains = ControllerGains::new(k_omega, k, k).expect("valid gains");
        let err = AttitudeErrorState::new(random_rotation(&mut rng), random_vec(&mut rng, 5.0));
        let rv = command(ControllerKind::RotationVector, &err, &gains);
        let new = command(ControllerKind::ProportionalTiltPriority, &err, &gains);
        worst_equal = worst_equal.max((rv - new).norm());
        equal_gains &= (rv - new).norm() <= tol(&rv);
    }

    let gains = ControllerGains::default();
    let mut pure_tilt = true;
    let mut worst_tilt = 0.0f64;
    for _ in 0..1000 {
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let axis = UnitVec3::normalize(Vec3::new(phi.cos(), phi.sin(), 0.0)).expect("unit");
        let angle = rng.gen_range(0.0..std::f64::consts::PI);
        let err = AttitudeErrorState::new(
            RotationMatrix::from_axis_angle(&axis, angle),
            random_vec(&mut rng, 5.0),
        );
        let rv = command(ControllerKind::RotationVector, &err, &gains);
        let new = command(ControllerKind::ProportionalTiltPriority, &err, &gains);
        worst_tilt = worst_tilt.max((rv - new).norm());
        pure_tilt &= (rv - new).norm() <= tol(&rv);
    }

    let mut c = Checks::new();
    c.check(equal_gains, format!("ky = kr: max |NEW − RV| {worst_equal:.1e}"));
    c.check(pure_tilt, format!("pure tilt: max |NEW − RV| {worst_tilt:.1e}"));
    c.finish(4, "algebraic reductions")
}

const ATTITUDE_PRESETS: [&str; 3] = ["iv-b-spin", "iv-c-yaw", "iv-d-tilt"];

/// Lyapunov descent and rate consistency along the attitude presets.
pub fn criterion_5() -> CriterionOutcome {
    let mut c = Checks::new();
    for name in ATTITUDE_PRESETS {
        let cfg = preset(name).expect("preset");
        for kind in [LyapunovKind::SS, LyapunovKind::RV, LyapunovKind::New] {
            let trace = match cfg.simulate(kind.controller()) {
                Ok(t) => t,
                Err(e) => {
                    c.check(false, format!("{name}/{}: {e}", kind.controller()));
                    continue;
                }
            };
            let descent = check_descent(&trace, kind).expect("matching kind");
            let rate = check_rate(&trace, kind).expect("matching kind");
            let label = format!("{name}/{kind}");
            c.check(
                descent.monotone,
                format!("{label} max increase {:.1e}", descent.max_increase),
            );
            c.check(
                rate.consistent,
                format!(
                    "{label} dJ/dt worst ratio {:.2} at t={:.3}",
                    rate.worst_ratio, rate.worst_t
                ),
            );
        }
    }
    if c.failures.is_empty() {
        c.notes = vec!["9 traces monotone, dJ/dt within max(1e-4, 1%)".into()];
    }
    c.finish(5, "Lyapunov descent")
}

fn timed_run(name: &str, kind: ControllerKind) -> Result<(SimTrace, Duration), String> {
    let cfg = preset(name).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let trace = cfg.simulate(kind).map_err(|e| e.to_string())?;
    Ok((trace, started.elapsed()))
}

/// Spinning start: the skew-symmetric law lingers near 180°.
pub fn criterion_6() -> CriterionOutcome {
    let mut c = Checks::new();
    let runs: Result<Vec<_>, _> = [
        ControllerKind::SkewSymmetric,
        ControllerKind::RotationVector,
        ControllerKind::ProportionalTiltPriority,
    ]
    .iter()
    .map(|&k| timed_run("iv-b-spin", k))
    .collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => {
            c.check(false, e);
            return c.finish(6, "spinning start");
        }
    };
    let (ss, rv, new) = (&runs[0].0, &runs[1].0, &runs[2].0);

    let (_, window) = scenario::linger(&ss.records, 170f64.to_radians(), ss.dt);
    c.check(window >= 2.0, format!("SS contiguous window above 170° {window:.3} s"));
    c.check(
        (window - ORACLE_SS_LINGER_WINDOW_S).abs() <= 2.0 * ss.dt,
        format!("oracle window {ORACLE_SS_LINGER_WINDOW_S:.3} s"),
    );

    let half = std::f64::consts::FRAC_PI_2;
    let drop = |t: &SimTrace| settle_time(&t.records, half, |r| r.rho_e);
    match (drop(ss), drop(rv), drop(new)) {
        (Some(t_ss), Some(t_rv), Some(t_new)) => {
            c.check(
                5.0 * t_rv <= t_ss && 5.0 * t_new <= t_ss,
                format!(
                    "below 90°: SS {t_ss:.3} s, RV {t_rv:.3} s, NEW {t_new:.3} s (ratio {:.2}, need ≥ 5)",
                    t_ss / t_rv.max(t_new)
                ),
            );
            c.check(
                (t_ss - ORACLE_SS_BELOW_90_S).abs() <= 2.0 * ss.dt
                    && (t_rv - ORACLE_RV_BELOW_90_S).abs() <= 2.0 * ss.dt,
                "drop times match oracle".into(),
            );
        }
        other => c.check(false, format!("ρe never settles below 90°: {other:?}")),
    }

    let gap = rv
        .records
        .iter()
        .zip(&new.records)
        .map(|(a, b)| (a.rho_e - b.rho_e).abs())
        .fold(0.0f64, f64::max);
    c.check(gap <= 1e-7, format!("max |ρe(NEW) − ρe(RV)| {gap:.1e}"));

    let slowest = runs.iter().map(|r| r.1).max().unwrap_or_default();
    c.check(
        slowest < Duration::from_secs(5),
        format!("slowest run {:.2} s", slowest.as_secs_f64()),
    );
    c.finish(6, "spinning start")
}

fn settle_tilt(name: &str, kind: ControllerKind) -> Result<Option<f64>, String> {
    let (trace, _) = timed_run(name, kind)?;
    Ok(settle_time(&trace.records, 1f64.to_radians(), |r| r.rho_r))
}

fn fmt_time(t: Option<f64>) -> String {
    t.map_or_else(|| "never".into(), |t| format!("{t:.3} s"))
}

/// Mostly-yaw error: tilt-prioritizing laws fix the tilt first.
pub fn criterion_7() -> CriterionOutcome {
    let mut c = Checks::new();
    let times: Result<Vec<_>, _> = ControllerKind::ALL
        .iter()
        .map(|&k| settle_tilt("iv-c-yaw", k))
        .collect();
    match times {
        Ok(t) => {
            let inf = |x: Option<f64>| x.unwrap_or(f64::INFINITY);
            let (ss, rv, qtp, new) = (inf(t[0]), inf(t[1]), inf(t[2]), inf(t[3]));
            c.check(
                new < rv && qtp < rv && rv < ss,
                format!(
                    "tilt settle NEW {} QTP {} RV {} SS {}",
                    fmt_time(t[3]),
                    fmt_time(t[2]),
                    fmt_time(t[1]),
                    fmt_time(t[0])
                ),
            );
        }
        Err(e) => c.check(false, e),
    }
    c.finish(7, "yaw-dominant recovery")
}

/// Mostly-tilt error: NEW commands less yaw and converges no later than QTP.
pub fn criterion_8() -> CriterionOutcome {
    let mut c = Checks::new();
    let runs = timed_run("iv-d-tilt", ControllerKind::ProportionalTiltPriority)
        .and_then(|new| Ok((new.0, timed_run("iv-d-tilt", ControllerKind::QuaternionTiltPriority)?.0)));
    match runs {
        Ok((new, qtp)) => {
            let peak = |t: &SimTrace| t.records.iter().map(|r| r.command_parallel).fold(0.0, f64::max);
            let (p_new, p_qtp) = (peak(&new), peak(&qtp));
            c.check(
                p_new < p_qtp,
                format!("peak yaw command NEW {p_new:.3} vs QTP {p_qtp:.3} rad/s²"),
            );
            let ten = 10f64.to_radians();
            let t_new = settle_time(&new.records, ten, |r| r.rho_e);
            let t_qtp = settle_time(&qtp.records, ten, |r| r.rho_e);
            let ok = match (t_new, t_qtp) {
                (Some(a), Some(b)) => a <= b,
                (Some(_), None) => true,
                _ => false,
            };
            c.check(
                ok,
                format!("below 10°: NEW {} vs QTP {}", fmt_time(t_new), fmt_time(t_qtp)),
            );
        }
        Err(e) => c.check(false, e),
    }
    c.finish(8, "tilt-dominant recovery")
}

/// Terminal time of the order check, s.
pub const ORDER_CHECK_HORIZON_S: f64 = 1.0;
/// Coarse step of the order check; the fine step is half of it.
pub const ORDER_CHECK_DT_S: f64 = 0.01;
/// Oracle step for the order check.
pub const ORACLE_DT_S: f64 = 1e-6;

/// Fourth-order convergence of the simulator toward the quaternion oracle.
pub fn criterion_9() -> CriterionOutcome {
    let mut c = Checks::new();
    let base = preset("iv-b-spin").expect("preset");
    let omega0: [f64; 3] = base.initial_omega.into();
    let oracle_steps = (ORDER_CHECK_HORIZON_S / ORACLE_DT_S).round() as usize;
    for kind in ControllerKind::ALL {
        let reference = reference_run(
            ReferenceState {
                q: Quat::IDENTITY,
                omega: omega0,
            },
            kind,
            &ReferenceGains::default(),
            ORACLE_DT_S,
            oracle_steps,
            oracle_steps,
        );
        let truth = reference.last().expect("terminal sample").rho_e;
        let mut errors = [0.0; 2];
        for (i, dt) in [ORDER_CHECK_DT_S, 0.5 * ORDER_CHECK_DT_S].into_iter().enumerate() {
            let cfg = base
                .clone()
                .with_sim(Some(dt), Some(ORDER_CHECK_HORIZON_S))
                .expect("valid step");
            let trace = cfg.simulate(kind).expect("simulation");
            errors[i] = (trace.last().expect("terminal record").rho_e - truth).abs();
        }
        let ratio = errors[0] / errors[1];
        c.check(
            (12.0..=20.0).contains(&ratio),
            format!("{kind} {:.1e}→{:.1e} ratio {ratio:.1}", errors[0], errors[1]),
        );
    }
    c.finish(9, "integrator order")
}

/// Cascaded takeoff with a near-180° yaw error.
pub fn criterion_10() -> CriterionOutcome {
    let mut c = Checks::new();
    let cfg = preset("v-takeoff-yaw").expect("preset");
    let Setpoint::Position { p_des, .. } = cfg.setpoint else {
        unreachable!("takeoff preset has a position setpoint")
    };
    let run = |kind| cfg.simulate(kind).map_err(|e| e.to_string());
    match (
        run(ControllerKind::SkewSymmetric),
        run(ControllerKind::ProportionalTiltPriority),
    ) {
        (Ok(ss), Ok(new)) => {
            let dev = |t: &SimTrace| scenario::max_horizontal_deviation(&t.records, &p_des).unwrap_or(f64::NAN);
            let (d_ss, d_new) = (dev(&ss), dev(&new));
            c.check(
                d_ss >= 3.0 * d_new,
                format!("horizontal deviation SS {d_ss:.3} m vs NEW {d_new:.3} m"),
            );
            let final_err = new
                .last()
                .and_then(|r| r.translation)
                .map_or(f64::INFINITY, |t| (t.p - p_des).norm());
            c.check(final_err <= 0.05, format!("NEW final error {final_err:.4} m"));
        }
        (a, b) => {
            for e in [a.err(), b.err()].into_iter().flatten() {
                c.check(false, e);
            }
        }
    }
    c.finish(10, "cascaded takeoff")
}

pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
    ]
}
