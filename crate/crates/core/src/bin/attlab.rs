//! Command-line front end: run scenarios, compare controllers, run the
//! acceptance battery.
//!
//! Exit codes: 0 success, 1 acceptance or validation failure, 2 diverged
//! simulation, 3 bad input.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use attlab::acceptance;
use attlab::dynamics::SimError;
use attlab::scenario::{
    self, compare_report, read_summaries, ScenarioError, ScenarioSummary, Thresholds,
    DEFAULT_LINGER_DEG, DEFAULT_SAFETY_THRESHOLD_S, DEFAULT_SETTLE_DEG,
};
use attlab::ControllerKind;

const EXIT_FAILURE: u8 = 1;
const EXIT_DIVERGED: u8 = 2;
const EXIT_BAD_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "attlab", version, about = "Multicopter attitude control laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario with each selected controller.
    Run {
        /// Preset name (iv-b-spin, iv-c-yaw, iv-d-tilt, v-takeoff-yaw).
        #[arg(required_unless_present = "config", conflicts_with = "config")]
        preset: Option<String>,
        /// Scenario document (TOML).
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        /// Controllers to run (SS, RV, QTP, NEW); defaults to the scenario's list.
        #[arg(long = "controller", value_name = "KIND", num_args = 1..)]
        controllers: Vec<ControllerKind>,
        /// Integration step, s.
        #[arg(long, value_name = "S", allow_negative_numbers = true)]
        dt: Option<f64>,
        /// Simulated duration, s.
        #[arg(long, value_name = "S", allow_negative_numbers = true)]
        duration: Option<f64>,
        /// Output directory for CSV traces and the summary document.
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Settle threshold, degrees.
        #[arg(long, value_name = "D", allow_negative_numbers = true, default_value_t = DEFAULT_SETTLE_DEG)]
        settle_deg: f64,
        /// Linger threshold, degrees.
        #[arg(long, value_name = "D", allow_negative_numbers = true, default_value_t = DEFAULT_LINGER_DEG)]
        linger_deg: f64,
    },
    /// Rank the controllers of every scenario summary found in DIR.
    Report {
        dir: PathBuf,
        /// Linger duration above which a controller is flagged unsafe, s.
        #[arg(long, value_name = "S", default_value_t = DEFAULT_SAFETY_THRESHOLD_S)]
        safety_threshold: f64,
    },
    /// Run the full acceptance battery.
    Acceptance,
    /// Print a preset as a scenario document, as a starting point for --config.
    Preset { name: String },
}

fn bad_input(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_BAD_INPUT)
}

fn scenario_failure(e: ScenarioError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        ScenarioError::Validation(_) => ExitCode::from(EXIT_FAILURE),
        ScenarioError::Sim(SimError::DivergedState { .. } | SimError::NegativeThrust(_)) => {
            ExitCode::from(EXIT_DIVERGED)
        }
        _ => ExitCode::from(EXIT_BAD_INPUT),
    }
}

fn print_summary(summary: &ScenarioSummary) {
    println!(
        "scenario {} (dt {} s, {} s)",
        summary.scenario, summary.dt, summary.duration
    );
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
    println!(
        "  {:<4} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "ctrl", "settle", "tilt", "linger", "peak_yaw", "peak_tlt", "lyapunov"
    );
    for m in &summary.controllers {
        let lyap = match m.lyapunov {
            Some(r) if r.monotone => "ok",
            Some(_) => "RISES",
            None => "-",
        };
        println!(
            "  {:<4} {:>9} {:>9} {:>9.3} {:>9.3} {:>9.3} {:>9}",
            m.controller.label(),
            opt(m.settle_time_total),
            opt(m.settle_time_tilt),
            m.linger_duration,
            m.peak_yaw_command,
            m.peak_tilt_command,
            lyap
        );
        if let (Some(dev), Some(err)) = (m.max_horizontal_deviation, m.final_position_error) {
            println!("       horizontal deviation {dev:.3} m, final position error {err:.4} m");
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    preset: Option<String>,
    config: Option<PathBuf>,
    controllers: Vec<ControllerKind>,
    dt: Option<f64>,
    duration: Option<f64>,
    out: &Path,
    settle_deg: f64,
    linger_deg: f64,
) -> ExitCode {
    for (flag, v) in [("--settle-deg", settle_deg), ("--linger-deg", linger_deg)] {
        if !(v > 0.0 && v < 180.0) {
            return bad_input(format!("{flag} must lie in (0, 180), got {v}"));
        }
    }
    let cfg = match (preset, config) {
        (Some(name), None) => scenario::preset(&name),
        (None, Some(path)) => std::fs::read_to_string(&path)
            .map_err(|e| ScenarioError::Io { path, source: e })
            .and_then(|text| scenario::load_scenario(&text)),
        _ => return bad_input("give either a preset name or --config FILE"),
    };
    let cfg = match cfg.and_then(|c| c.with_sim(dt, duration)) {
        Ok(c) => c,
        Err(ScenarioError::Sim(e)) => return bad_input(e),
        Err(e) => return scenario_failure(e),
    };
    let cfg = if controllers.is_empty() {
        cfg
    } else {
        match cfg.with_controllers(controllers) {
            Ok(c) => c,
            Err(e) => return scenario_failure(e),
        }
    };
    let thresholds = Thresholds {
        settle_deg,
        linger_deg,
    };
    let summary = match scenario::run(&cfg, &thresholds, Some(out)) {
        Ok(s) => s,
        Err(e) => return scenario_failure(e),
    };
    print_summary(&summary);
    if let Ok(report) = compare_report(&summary.controllers, DEFAULT_SAFETY_THRESHOLD_S) {
        print!("{report}");
    }
    println!("wrote traces and summary to {}", out.display());
    ExitCode::SUCCESS
}

fn cmd_report(dir: &Path, safety_threshold: f64) -> ExitCode {
    if !(safety_threshold >= 0.0) {
        return bad_input("--safety-threshold must be non-negative");
    }
    let summaries = match read_summaries(dir) {
        Ok(s) if s.is_empty() => return bad_input(format!("no *_summary.json in {}", dir.display())),
        Ok(s) => s,
        Err(e) => return scenario_failure(e),
    };
    let mut status = ExitCode::SUCCESS;
    for summary in &summaries {
        match compare_report(&summary.controllers, safety_threshold) {
            Ok(report) => {
                print!("{report}");
                let path = dir.join(format!("{}_report.json", summary.scenario));
                let text = serde_json::to_string_pretty(&report).expect("report serializes");
                if let Err(e) = std::fs::write(&path, text + "\n") {
                    return bad_input(format!("{}: {e}", path.display()));
                }
            }
            Err(e) => {
                eprintln!("error: scenario {}: {e}", summary.scenario);
                status = ExitCode::from(EXIT_FAILURE);
            }
        }
    }
    status
}

fn cmd_acceptance() -> ExitCode {
    let outcomes = acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    if passed == outcomes.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_BAD_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match cli.command {
        Command::Run {
            preset,
            config,
            controllers,
            dt,
            duration,
            out,
            settle_deg,
            linger_deg,
        } => cmd_run(
            preset,
            config,
            controllers,
            dt,
            duration,
            &out,
            settle_deg,
            linger_deg,
        ),
        Command::Report {
            dir,
            safety_threshold,
        } => cmd_report(&dir, safety_threshold),
        Command::Acceptance => cmd_acceptance(),
        Command::Preset { name } => match scenario::preset(&name) {
            Ok(cfg) => {
                print!("{}", cfg.to_document());
                ExitCode::SUCCESS
            }
            Err(e) => bad_input(e),
        },
    }
}
