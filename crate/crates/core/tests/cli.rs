//! End-to-end runs of the `attlab` binary.

use std::process::Command;

fn attlab(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_attlab"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

#[test]
fn run_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout, _) = attlab(&["run", "iv-b-spin", "--out", out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("UNSAFE: SS"), "{stdout}");
    for kind in ["SS", "RV", "QTP", "NEW"] {
        assert!(dir.path().join(format!("iv-b-spin_{kind}.csv")).exists());
    }
    let (code, stdout, _) = attlab(&["report", out]);
    assert_eq!(code, 0);
    assert!(stdout.contains("linger_duration"), "{stdout}");
    assert!(dir.path().join("iv-b-spin_report.json").exists());
}

#[test]
fn config_file_and_controller_selection() {
    let dir = tempfile::tempdir().unwrap();
    let (code, doc, _) = attlab(&["preset", "iv-c-yaw"]);
    assert_eq!(code, 0);
    let path = dir.path().join("scenario.toml");
    std::fs::write(&path, doc).unwrap();
    let out = dir.path().join("out");
    let (code, _, _) = attlab(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--controller",
        "rv",
        "NEW",
        "--duration",
        "1",
        "--dt",
        "0.01",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(out.join("iv-c-yaw_RV.csv").exists());
    assert!(!out.join("iv-c-yaw_SS.csv").exists());
    let csv = std::fs::read_to_string(out.join("iv-c-yaw_NEW.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn single_controller_report_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, _, _) = attlab(&["run", "iv-c-yaw", "--controller", "SS", "--duration", "0.5", "--out", out]);
    assert_eq!(code, 0);
    let (code, _, stderr) = attlab(&["report", out]);
    assert_eq!(code, 1);
    assert!(stderr.contains("at least two"), "{stderr}");
}

#[test]
fn invalid_config_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "name = \"bad\"\ncontrollers = []\ninitial_attitude_axis = [0.0, 0.0, 1.0]\n\
         initial_attitude_angle_deg = 10.0\n[setpoint]\nkind = \"attitude\"\n",
    )
    .unwrap();
    let (code, _, stderr) = attlab(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 1, "{stderr}");
    assert!(stderr.contains("controllers"), "{stderr}");
}

#[test]
fn malformed_config_and_bad_flags_are_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "name = \"x\"\ncontrollers = [\n").unwrap();
    let (code, _, stderr) = attlab(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stderr.contains("line"), "{stderr}");
    assert_eq!(attlab(&["run", "no-such-preset"]).0, 3);
    assert_eq!(attlab(&["run", "iv-b-spin", "--dt", "-1"]).0, 3);
    assert_eq!(attlab(&["run", "iv-b-spin", "--controller", "PID"]).0, 3);
    assert_eq!(attlab(&["run", "iv-b-spin", "--settle-deg", "200"]).0, 3);
    assert_eq!(attlab(&["report", dir.path().to_str().unwrap()]).0, 3);
    assert_eq!(attlab(&["frobnicate"]).0, 3);
}

#[test]
fn diverging_run_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, stderr) = attlab(&[
        "run",
        "iv-b-spin",
        "--dt",
        "2",
        "--duration",
        "400",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "{stderr}");
    assert!(stderr.contains("diverged"), "{stderr}");
}
