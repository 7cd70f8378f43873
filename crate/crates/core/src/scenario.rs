//! Scenarios: presets, config documents, metrics, CSV traces and comparison
//! reports.
//!
//! A scenario document is TOML with units spelled out in every numeric field
//! name:
//!
//! ```toml
//! name = "yaw-recovery"
//! controllers = ["SS", "RV", "QTP", "NEW"]
//! initial_attitude_axis = [0.0995, 0.0, 0.995]
//! initial_attitude_angle_deg = 170.0
//! initial_omega_rad_s = [0.0, 0.0, 0.0]
//!
//! [setpoint]
//! kind = "attitude"          # or "position"
//!
//! [gains]
//! k_omega_per_s = [2.8284271247461903, 2.8284271247461903, 1.4142135623730951]
//! k_r_per_s2 = 4.0
//! k_y_per_s2 = 1.0
//!
//! [sim]
//! dt_s = 0.001
//! duration_s = 15.0
//! renorm_interval_steps = 100
//! ```
//!
//! `gains`, `sim` and `body` are optional and default to the reference
//! values. A `position` setpoint takes `position_m`, and optionally
//! `initial_position_m`, `initial_velocity_m_s`, `k_p_per_s2` and
//! `k_v_per_s`.

use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controllers::{
    BodyParams, ControllerGains, ControllerKind, DesiredAttitudeTrajectory,
};
use crate::dynamics::{
    simulate, simulate_cascaded, AttitudeState, CascadedSetup, PositionLoopGains, SimConfig,
    SimError, SimTrace, TranslationalState, TraceRecord,
};
use crate::lyapunov::{self, DescentReport};
use crate::so3::{rot_from_axis_angle, AxisAngle, Mat3, Vec3};

pub const DEFAULT_SETTLE_DEG: f64 = 1.0;
pub const DEFAULT_LINGER_DEG: f64 = 170.0;
/// Linger duration above which a controller is flagged unsafe, s.
pub const DEFAULT_SAFETY_THRESHOLD_S: f64 = 1.0;

pub const PRESETS: [&str; 4] = ["iv-b-spin", "iv-c-yaw", "iv-d-tilt", "v-takeoff-yaw"];

/// CSV header shared by every trace file. Cascaded runs append `p_x,p_y,p_z`.
pub const CSV_HEADER: &str =
    "t,rho_e,rho_r,rho_y,omega_e_x,omega_e_y,omega_e_z,cmd_perp,cmd_par,J";

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ScenarioError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// What the attitude loop tracks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Setpoint {
    Attitude(DesiredAttitudeTrajectory),
    /// Cascaded flight to `p_des` starting from `initial`.
    Position {
        p_des: Vec3,
        initial: TranslationalState,
        gains: PositionLoopGains,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub initial_attitude: AxisAngle,
    pub initial_omega: Vec3,
    pub setpoint: Setpoint,
    pub gains: ControllerGains,
    pub body: BodyParams,
    pub sim: SimConfig,
    pub controllers: Vec<ControllerKind>,
}

impl ScenarioConfig {
    pub fn initial_state(&self) -> AttitudeState {
        AttitudeState::new(rot_from_axis_angle(&self.initial_attitude), self.initial_omega)
    }

    /// Simulates one controller.
    pub fn simulate(&self, controller: ControllerKind) -> Result<SimTrace, SimError> {
        match &self.setpoint {
            Setpoint::Attitude(traj) => {
                simulate(&self.initial_state(), controller, &self.gains, traj, &self.sim)
            }
            Setpoint::Position {
                p_des,
                initial,
                gains,
            } => {
                let setup = CascadedSetup {
                    attitude: self.initial_state(),
                    translation: *initial,
                    p_des: *p_des,
                    gains: self.gains,
                    position_gains: *gains,
                    body: self.body,
                };
                simulate_cascaded(&setup, controller, &self.sim)
            }
        }
    }

    pub fn with_sim(mut self, dt: Option<f64>, duration: Option<f64>) -> Result<Self, ScenarioError> {
        let dt = dt.unwrap_or(self.sim.dt());
        let duration = duration.unwrap_or(self.sim.duration());
        self.sim = SimConfig::new(dt, duration, self.sim.renorm_interval())?;
        Ok(self)
    }

    pub fn with_controllers(mut self, controllers: Vec<ControllerKind>) -> Result<Self, ScenarioError> {
        if controllers.is_empty() {
            return Err(ScenarioError::Validation("controller list must be non-empty".into()));
        }
        self.controllers = controllers;
        Ok(self)
    }

    /// The document form of this config.
    pub fn to_document(&self) -> String {
        let doc = ScenarioDocument::from_config(self);
        toml::to_string(&doc).expect("scenario document serializes")
    }
}

fn attitude_preset(name: &str, axis: [f64; 3], angle_deg: f64, omega: [f64; 3]) -> ScenarioConfig {
    ScenarioConfig {
        name: name.to_string(),
        initial_attitude: AxisAngle::from_degrees(Vec3::from(axis), angle_deg)
            .expect("preset axis is nonzero"),
        initial_omega: Vec3::from(omega),
        setpoint: Setpoint::Attitude(DesiredAttitudeTrajectory::default()),
        gains: ControllerGains::default(),
        body: BodyParams::default(),
        sim: SimConfig::default(),
        controllers: ControllerKind::ALL.to_vec(),
    }
}

/// Built-in scenarios.
///
/// - `iv-b-spin`: level, spinning at 10.8 rad/s about `e1`.
/// - `iv-c-yaw`: at rest, 170° about `(0.0995, 0, 0.995)` (mostly yaw).
/// - `iv-d-tilt`: at rest, 179° about `(0.995, 0, 0.0995)` (mostly tilt).
/// - `v-takeoff-yaw`: cascaded flight from the origin to `(0.5, 0, 1.5)` m
///   with a 177° initial yaw error, over 20 s.
pub fn preset(name: &str) -> Result<ScenarioConfig, ScenarioError> {
    match name {
        "iv-b-spin" => Ok(attitude_preset(name, [1.0, 0.0, 0.0], 0.0, [10.8, 0.0, 0.0])),
        "iv-c-yaw" => Ok(attitude_preset(name, [0.0995, 0.0, 0.995], 170.0, [0.0; 3])),
        "iv-d-tilt" => Ok(attitude_preset(name, [0.995, 0.0, 0.0995], 179.0, [0.0; 3])),
        "v-takeoff-yaw" => {
            let mut cfg = attitude_preset(name, [0.0, 0.0, 1.0], 177.0, [0.0; 3]);
            cfg.setpoint = Setpoint::Position {
                p_des: Vec3::new(0.5, 0.0, 1.5),
                initial: TranslationalState::default(),
                gains: PositionLoopGains::default(),
            };
            cfg.sim = SimConfig::new(1e-3, 20.0, crate::dynamics::DEFAULT_RENORM_INTERVAL)
                .expect("valid preset sim config");
            Ok(cfg)
        }
        _ => Err(ScenarioError::UnknownPreset(name.to_string())),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDocument {
    name: String,
    controllers: Vec<String>,
    initial_attitude_axis: [f64; 3],
    initial_attitude_angle_deg: f64,
    #[serde(default)]
    initial_omega_rad_s: [f64; 3],
    setpoint: SetpointDocument,
    #[serde(default)]
    gains: GainsDocument,
    #[serde(default)]
    body: BodyDocument,
    #[serde(default)]
    sim: SimDocument,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SetpointDocument {
    Attitude {
        #[serde(default = "default_axis")]
        attitude_axis: [f64; 3],
        #[serde(default)]
        attitude_angle_deg: f64,
        #[serde(default)]
        omega_rad_s: [f64; 3],
        #[serde(default)]
        alpha_rad_s2: [f64; 3],
    },
    Position {
        position_m: [f64; 3],
        #[serde(default)]
        initial_position_m: [f64; 3],
        #[serde(default)]
        initial_velocity_m_s: [f64; 3],
        #[serde(default = "default_kp")]
        k_p_per_s2: f64,
        #[serde(default = "default_kv")]
        k_v_per_s: f64,
    },
}

fn default_axis() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_kp() -> f64 {
    PositionLoopGains::default().k_p()
}

fn default_kv() -> f64 {
    PositionLoopGains::default().k_v()
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GainsDocument {
    k_omega_per_s: [f64; 3],
    k_r_per_s2: f64,
    k_y_per_s2: f64,
}

impl Default for GainsDocument {
    fn default() -> Self {
        let g = ControllerGains::default();
        Self {
            k_omega_per_s: (*g.k_omega()).into(),
            k_r_per_s2: g.k_r(),
            k_y_per_s2: g.k_y(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BodyDocument {
    inertia_diag_kg_m2: [f64; 3],
    mass_kg: f64,
    gravity_m_s2: [f64; 3],
}

impl Default for BodyDocument {
    fn default() -> Self {
        let b = BodyParams::default();
        Self {
            inertia_diag_kg_m2: b.inertia().diagonal().into(),
            mass_kg: b.mass(),
            gravity_m_s2: (*b.gravity()).into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimDocument {
    dt_s: f64,
    duration_s: f64,
    #[serde(default = "default_renorm")]
    renorm_interval_steps: usize,
}

fn default_renorm() -> usize {
    crate::dynamics::DEFAULT_RENORM_INTERVAL
}

impl Default for SimDocument {
    fn default() -> Self {
        let s = SimConfig::default();
        Self {
            dt_s: s.dt(),
            duration_s: s.duration(),
            renorm_interval_steps: s.renorm_interval(),
        }
    }
}

fn invalid(field: &str, e: impl fmt::Display) -> ScenarioError {
    ScenarioError::Validation(format!("{field}: {e}"))
}

impl ScenarioDocument {
    fn from_config(cfg: &ScenarioConfig) -> Self {
        let setpoint = match &cfg.setpoint {
            Setpoint::Attitude(traj) => {
                let aa = crate::so3::axis_angle_from_rot(&traj.r_des);
                SetpointDocument::Attitude {
                    attitude_axis: (*aa.axis).into(),
                    attitude_angle_deg: aa.angle.to_degrees(),
                    omega_rad_s: traj.omega_des.into(),
                    alpha_rad_s2: traj.alpha_des.into(),
                }
            }
            Setpoint::Position {
                p_des,
                initial,
                gains,
            } => SetpointDocument::Position {
                position_m: (*p_des).into(),
                initial_position_m: initial.p.into(),
                initial_velocity_m_s: initial.v.into(),
                k_p_per_s2: gains.k_p(),
                k_v_per_s: gains.k_v(),
            },
        };
        ScenarioDocument {
            name: cfg.name.clone(),
            controllers: cfg.controllers.iter().map(|c| c.label().to_string()).collect(),
            initial_attitude_axis: (*cfg.initial_attitude.axis).into(),
            initial_attitude_angle_deg: cfg.initial_attitude.angle.to_degrees(),
            initial_omega_rad_s: cfg.initial_omega.into(),
            setpoint,
            gains: GainsDocument {
                k_omega_per_s: (*cfg.gains.k_omega()).into(),
                k_r_per_s2: cfg.gains.k_r(),
                k_y_per_s2: cfg.gains.k_y(),
            },
            body: BodyDocument {
                inertia_diag_kg_m2: cfg.body.inertia().diagonal().into(),
                mass_kg: cfg.body.mass(),
                gravity_m_s2: (*cfg.body.gravity()).into(),
            },
            sim: SimDocument {
                dt_s: cfg.sim.dt(),
                duration_s: cfg.sim.duration(),
                renorm_interval_steps: cfg.sim.renorm_interval(),
            },
        }
    }

    fn into_config(self) -> Result<ScenarioConfig, ScenarioError> {
        if self.name.trim().is_empty() {
            return Err(invalid("name", "must be non-empty"));
        }
        if self.controllers.is_empty() {
            return Err(invalid("controllers", "list must be non-empty"));
        }
        let controllers = self
            .controllers
            .iter()
            .map(|c| c.parse::<ControllerKind>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid("controllers", e))?;
        let initial_attitude = AxisAngle::from_degrees(
            Vec3::from(self.initial_attitude_axis),
            self.initial_attitude_angle_deg,
        )
        .map_err(|e| invalid("initial_attitude_axis / initial_attitude_angle_deg", e))?;
        let initial_omega = finite_vec("initial_omega_rad_s", self.initial_omega_rad_s)?;

        let setpoint = match self.setpoint {
            SetpointDocument::Attitude {
                attitude_axis,
                attitude_angle_deg,
                omega_rad_s,
                alpha_rad_s2,
            } => {
                let aa = AxisAngle::from_degrees(Vec3::from(attitude_axis), attitude_angle_deg)
                    .map_err(|e| invalid("setpoint.attitude_axis / attitude_angle_deg", e))?;
                Setpoint::Attitude(DesiredAttitudeTrajectory {
                    r_des: rot_from_axis_angle(&aa),
                    omega_des: finite_vec("setpoint.omega_rad_s", omega_rad_s)?,
                    alpha_des: finite_vec("setpoint.alpha_rad_s2", alpha_rad_s2)?,
                })
            }
            SetpointDocument::Position {
                position_m,
                initial_position_m,
                initial_velocity_m_s,
                k_p_per_s2,
                k_v_per_s,
            } => Setpoint::Position {
                p_des: finite_vec("setpoint.position_m", position_m)?,
                initial: TranslationalState {
                    p: finite_vec("setpoint.initial_position_m", initial_position_m)?,
                    v: finite_vec("setpoint.initial_velocity_m_s", initial_velocity_m_s)?,
                },
                gains: PositionLoopGains::new(k_p_per_s2, k_v_per_s)
                    .map_err(|e| invalid("setpoint.k_p_per_s2 / k_v_per_s", e))?,
            },
        };
        let gains = ControllerGains::new(
            Vec3::from(self.gains.k_omega_per_s),
            self.gains.k_r_per_s2,
            self.gains.k_y_per_s2,
        )
        .map_err(|e| invalid("gains", e))?;
        let body = BodyParams::new(
            Mat3::from_diagonal(&Vec3::from(self.body.inertia_diag_kg_m2)),
            self.body.mass_kg,
            finite_vec("body.gravity_m_s2", self.body.gravity_m_s2)?,
        )
        .map_err(|e| invalid("body", e))?;
        let sim = SimConfig::new(self.sim.dt_s, self.sim.duration_s, self.sim.renorm_interval_steps)
            .map_err(|e| invalid("sim", e))?;
        Ok(ScenarioConfig {
            name: self.name,
            initial_attitude,
            initial_omega,
            setpoint,
            gains,
            body,
            sim,
            controllers,
        })
    }
}

fn finite_vec(field: &str, v: [f64; 3]) -> Result<Vec3, ScenarioError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(Vec3::from(v))
    } else {
        Err(invalid(field, "components must be finite"))
    }
}

fn line_of(src: &str, offset: usize) -> usize {
    src[..offset.min(src.len())].matches('\n').count() + 1
}

/// Parses and validates a scenario document.
pub fn load_scenario(document: &str) -> Result<ScenarioConfig, ScenarioError> {
    let doc: ScenarioDocument = toml::from_str(document).map_err(|e| ScenarioError::Parse {
        line: e.span().map(|s| line_of(document, s.start)),
        message: e.message().to_string(),
    })?;
    doc.into_config()
}

/// A preset name or, failing that, a path to a scenario document.
pub fn resolve(name_or_path: &str) -> Result<ScenarioConfig, ScenarioError> {
    if PRESETS.contains(&name_or_path) {
        return preset(name_or_path);
    }
    let path = Path::new(name_or_path);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::io(path, e))?;
        return load_scenario(&text);
    }
    Err(ScenarioError::UnknownPreset(name_or_path.to_string()))
}

/// Per-controller results of one scenario run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub scenario: String,
    pub controller: ControllerKind,
    /// First time after which `ρe` stays below the settle threshold; `None`
    /// if it never does within the run.
    pub settle_time_total: Option<f64>,
    /// Same, for the tilt angle `ρr`.
    pub settle_time_tilt: Option<f64>,
    /// Total time with `ρe` above the linger threshold, s.
    pub linger_duration: f64,
    /// Longest contiguous stretch above the linger threshold, s.
    pub longest_linger_window: f64,
    /// `max |αe,des · e3|`, rad/s².
    pub peak_yaw_command: f64,
    /// `max ‖αe,des ⊥ e3‖`, rad/s².
    pub peak_tilt_command: f64,
    pub final_rho_e: f64,
    /// Descent check of the matching Lyapunov function (attitude setpoints only).
    pub lyapunov: Option<DescentReport>,
    /// Cascaded runs: largest horizontal distance from the straight start–goal path, m.
    pub max_horizontal_deviation: Option<f64>,
    /// Cascaded runs: final distance to the position setpoint, m.
    pub final_position_error: Option<f64>,
}

/// First time after which `value(record) < threshold` for the rest of the
/// trace. `Some(0.0)` if it always holds, `None` if it fails at the last
/// record.
pub fn settle_time<F>(records: &[TraceRecord], threshold: f64, value: F) -> Option<f64>
where
    F: Fn(&TraceRecord) -> f64,
{
    match records.iter().rposition(|r| value(r) >= threshold) {
        None => Some(0.0),
        Some(i) if i + 1 < records.len() => Some(records[i + 1].t),
        Some(_) => None,
    }
}

/// `(total, longest contiguous)` time with `ρe > threshold`, counting one
/// step per record.
pub fn linger(records: &[TraceRecord], threshold: f64, dt: f64) -> (f64, f64) {
    let mut total = 0usize;
    let mut run = 0usize;
    let mut longest = 0usize;
    for r in records {
        if r.rho_e > threshold {
            total += 1;
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    (total as f64 * dt, longest as f64 * dt)
}

/// Largest horizontal distance of the trace from the segment joining its
/// start to `p_des`, projected on the horizontal plane.
pub fn max_horizontal_deviation(records: &[TraceRecord], p_des: &Vec3) -> Option<f64> {
    let start = records.first()?.translation?.p;
    let a = nalgebra::Vector2::new(start.x, start.y);
    let b = nalgebra::Vector2::new(p_des.x, p_des.y);
    let d = b - a;
    let len2 = d.norm_squared();
    records
        .iter()
        .filter_map(|r| r.translation)
        .map(|tr| {
            let h = nalgebra::Vector2::new(tr.p.x, tr.p.y);
            let s = if len2 > 0.0 {
                ((h - a).dot(&d) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            (h - (a + s * d)).norm()
        })
        .reduce(f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub settle_deg: f64,
    pub linger_deg: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            settle_deg: DEFAULT_SETTLE_DEG,
            linger_deg: DEFAULT_LINGER_DEG,
        }
    }
}

pub fn compute_metrics(
    cfg: &ScenarioConfig,
    trace: &SimTrace,
    thresholds: &Thresholds,
) -> MetricsSummary {
    let recs = &trace.records;
    let settle = thresholds.settle_deg.to_radians();
    let (linger_duration, longest_linger_window) =
        linger(recs, thresholds.linger_deg.to_radians(), trace.dt);
    let lyapunov = match (&cfg.setpoint, trace.lyapunov_kind()) {
        (Setpoint::Attitude(_), Some(kind)) => lyapunov::check_descent(trace, kind).ok(),
        _ => None,
    };
    let (max_dev, final_err) = match &cfg.setpoint {
        Setpoint::Position { p_des, .. } => (
            max_horizontal_deviation(recs, p_des),
            recs.last()
                .and_then(|r| r.translation)
                .map(|t| (t.p - p_des).norm()),
        ),
        Setpoint::Attitude(_) => (None, None),
    };
    MetricsSummary {
        scenario: cfg.name.clone(),
        controller: trace.controller,
        settle_time_total: settle_time(recs, settle, |r| r.rho_e),
        settle_time_tilt: settle_time(recs, settle, |r| r.rho_r),
        linger_duration,
        longest_linger_window,
        peak_yaw_command: recs.iter().map(|r| r.command_parallel).fold(0.0, f64::max),
        peak_tilt_command: recs.iter().map(|r| r.command_perpendicular).fold(0.0, f64::max),
        final_rho_e: recs.last().map_or(0.0, |r| r.rho_e),
        lyapunov,
        max_horizontal_deviation: max_dev,
        final_position_error: final_err,
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.10e}")).unwrap_or_default()
}

/// Writes a trace as CSV with the fixed column order of [`CSV_HEADER`].
pub fn write_trace_csv<W: Write>(trace: &SimTrace, mut w: W) -> std::io::Result<()> {
    let cascaded = trace.records.first().is_some_and(|r| r.translation.is_some());
    if cascaded {
        writeln!(w, "{CSV_HEADER},p_x,p_y,p_z")?;
    } else {
        writeln!(w, "{CSV_HEADER}")?;
    }
    for r in &trace.records {
        write!(
            w,
            "{:.6},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{}",
            r.t,
            r.rho_e,
            r.rho_r,
            r.rho_y,
            r.error.omega_e.x,
            r.error.omega_e.y,
            r.error.omega_e.z,
            r.command_perpendicular,
            r.command_parallel,
            fmt_opt(r.lyapunov),
        )?;
        if let Some(tr) = r.translation.filter(|_| cascaded) {
            write!(w, ",{:.10e},{:.10e},{:.10e}", tr.p.x, tr.p.y, tr.p.z)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Summary document written next to the traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: String,
    pub dt: f64,
    pub duration: f64,
    pub settle_deg: f64,
    pub linger_deg: f64,
    pub controllers: Vec<MetricsSummary>,
}

pub fn trace_file_name(scenario: &str, controller: ControllerKind) -> String {
    format!("{scenario}_{}.csv", controller.label())
}

pub fn summary_file_name(scenario: &str) -> String {
    format!("{scenario}_summary.json")
}

/// Runs every controller of the scenario concurrently.
///
/// With `out_dir`, each trace is written to its own CSV file and the summary
/// to a JSON document. Results are returned in the config's controller order.
pub fn run(
    cfg: &ScenarioConfig,
    thresholds: &Thresholds,
    out_dir: Option<&Path>,
) -> Result<ScenarioSummary, ScenarioError> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| ScenarioError::io(dir, e))?;
    }
    let results: Vec<Result<MetricsSummary, ScenarioError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = cfg
            .controllers
            .iter()
            .map(|&kind| {
                scope.spawn(move || -> Result<MetricsSummary, ScenarioError> {
                    let trace = cfg.simulate(kind)?;
                    if let Some(dir) = out_dir {
                        let path = dir.join(trace_file_name(&cfg.name, kind));
                        let file = File::create(&path).map_err(|e| ScenarioError::io(&path, e))?;
                        let mut w = BufWriter::new(file);
                        write_trace_csv(&trace, &mut w)
                            .and_then(|_| w.flush())
                            .map_err(|e| ScenarioError::io(&path, e))?;
                    }
                    Ok(compute_metrics(cfg, &trace, thresholds))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("simulation thread panicked"))
            .collect()
    });
    let controllers = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let summary = ScenarioSummary {
        scenario: cfg.name.clone(),
        dt: cfg.sim.dt(),
        duration: cfg.sim.duration(),
        settle_deg: thresholds.settle_deg,
        linger_deg: thresholds.linger_deg,
        controllers,
    };
    if let Some(dir) = out_dir {
        let path = dir.join(summary_file_name(&cfg.name));
        let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
        std::fs::write(&path, text + "\n").map_err(|e| ScenarioError::io(&path, e))?;
    }
    Ok(summary)
}

/// Reads every `*_summary.json` in `dir`, sorted by file name.
pub fn read_summaries(dir: &Path) -> Result<Vec<ScenarioSummary>, ScenarioError> {
    let entries = std::fs::read_dir(dir).map_err(|e| ScenarioError::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.ends_with("_summary.json"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| ScenarioError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| ScenarioError::Parse {
                line: Some(e.line()),
                message: format!("{}: {e}", p.display()),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error("a comparison needs at least two summaries, got {0}")]
    InsufficientComparands(usize),
    #[error("summaries come from different scenarios ({0} and {1})")]
    MixedScenarios(String, String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    /// Competition rank: tied values share the better rank.
    pub rank: usize,
    pub controller: ControllerKind,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRanking {
    pub metric: String,
    /// Best (smallest) first; missing values rank last.
    pub entries: Vec<RankEntry>,
    /// Groups of controllers with identical values.
    pub ties: Vec<Vec<ControllerKind>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub scenario: String,
    pub safety_threshold_s: f64,
    pub rankings: Vec<MetricRanking>,
    /// Controllers whose linger duration exceeds the safety threshold.
    pub unsafe_controllers: Vec<ControllerKind>,
}

type MetricFn = fn(&MetricsSummary) -> Option<f64>;

const RANKED_METRICS: [(&str, MetricFn); 6] = [
    ("settle_time_total", |m| m.settle_time_total),
    ("settle_time_tilt", |m| m.settle_time_tilt),
    ("linger_duration", |m| Some(m.linger_duration)),
    ("peak_yaw_command", |m| Some(m.peak_yaw_command)),
    ("peak_tilt_command", |m| Some(m.peak_tilt_command)),
    ("max_horizontal_deviation", |m| m.max_horizontal_deviation),
];

fn rank(metric: &str, summaries: &[MetricsSummary], value: MetricFn) -> MetricRanking {
    let mut items: Vec<(ControllerKind, Option<f64>)> =
        summaries.iter().map(|m| (m.controller, value(m))).collect();
    let key = |v: &Option<f64>| v.unwrap_or(f64::INFINITY);
    items.sort_by(|a, b| key(&a.1).total_cmp(&key(&b.1)).then(a.0.cmp(&b.0)));

    let mut entries = Vec::with_capacity(items.len());
    let mut ties: Vec<Vec<ControllerKind>> = Vec::new();
    for (i, &(controller, v)) in items.iter().enumerate() {
        let tied_with_prev = i > 0 && items[i - 1].1 == v;
        let rank = if tied_with_prev {
            entries.last().map_or(1, |e: &RankEntry| e.rank)
        } else {
            i + 1
        };
        if tied_with_prev {
            match ties.last_mut() {
                Some(group) if group.last() == Some(&items[i - 1].0) => group.push(controller),
                _ => ties.push(vec![items[i - 1].0, controller]),
            }
        }
        entries.push(RankEntry {
            rank,
            controller,
            value: v,
        });
    }
    MetricRanking {
        metric: metric.to_string(),
        entries,
        ties,
    }
}

/// Ranks controllers of one scenario on every metric and flags those whose
/// linger duration exceeds `safety_threshold_s`.
pub fn compare_report(
    summaries: &[MetricsSummary],
    safety_threshold_s: f64,
) -> Result<ComparisonReport, ReportError> {
    if summaries.len() < 2 {
        return Err(ReportError::InsufficientComparands(summaries.len()));
    }
    let scenario = &summaries[0].scenario;
    if let Some(other) = summaries.iter().find(|m| &m.scenario != scenario) {
        return Err(ReportError::MixedScenarios(
            scenario.clone(),
            other.scenario.clone(),
        ));
    }
    let rankings = RANKED_METRICS
        .iter()
        .filter(|(_, f)| summaries.iter().any(|m| f(m).is_some()))
        .map(|(name, f)| rank(name, summaries, *f))
        .collect();
    let unsafe_controllers = summaries
        .iter()
        .filter(|m| m.linger_duration > safety_threshold_s)
        .map(|m| m.controller)
        .collect();
    Ok(ComparisonReport {
        scenario: scenario.clone(),
        safety_threshold_s,
        rankings,
        unsafe_controllers,
    })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario {}", self.scenario)?;
        for r in &self.rankings {
            let mut line = format!("  {:<26}", r.metric);
            for e in &r.entries {
                let v = e
                    .value
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "n/a".into());
                let _ = write!(line, " {}.{}={}", e.rank, e.controller, v);
            }
            writeln!(f, "{line}")?;
            for group in &r.ties {
                let names: Vec<&str> = group.iter().map(|c| c.label()).collect();
                writeln!(f, "  {:<26} tie: {}", "", names.join(" = "))?;
            }
        }
        if self.unsafe_controllers.is_empty() {
            writeln!(
                f,
                "  no controller lingers longer than {:.2} s",
                self.safety_threshold_s
            )?;
        } else {
            for c in &self.unsafe_controllers {
                writeln!(
                    f,
                    "  UNSAFE: {c} lingers near 180 deg longer than {:.2} s",
                    self.safety_threshold_s
                )?;
            }
        }
        Ok(())
    }
}
