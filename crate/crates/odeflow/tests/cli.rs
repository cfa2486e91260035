use std::path::Path;
use std::process::{Command, Output};

fn odeflow(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_odeflow"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ODEFLOW_WORKERS")
        .output()
        .expect("binary runs")
}

/// CSV text without the trailing timing column.
fn without_timing(path: &Path) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head).to_string())
        .collect()
}

#[test]
fn convergence_csv_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["converge-exp", "--dims", "8,8", "--stepper", "rk4,ab3", "--dt", "0.5,0.25,0.125"];
    assert!(odeflow(&args, &a).status.success());
    assert!(odeflow(&args, &b).status.success());
    let text = std::fs::read_to_string(a.join("convergence.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("stepper,dt,steps,l_inf,l_2,seconds"));
    assert_eq!(text.lines().count(), 7);
    assert_eq!(without_timing(&a.join("convergence.csv")), without_timing(&b.join("convergence.csv")));
}

#[test]
fn worker_count_from_environment_gives_same_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = ["converge-exp", "--dims", "8,8", "--stepper", "dopri5", "--dt", "0.5,0.25"];
    assert!(odeflow(&args, &a).status.success());
    let status = Command::new(env!("CARGO_BIN_EXE_odeflow"))
        .args(args)
        .arg("--out")
        .arg(&b)
        .env("ODEFLOW_WORKERS", "4")
        .output()
        .unwrap();
    assert!(status.status.success());
    assert_eq!(without_timing(&a.join("convergence.csv")), without_timing(&b.join("convergence.csv")));
}

#[test]
fn order_assertion_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let ok = odeflow(&["converge-sig", "--stepper", "rk4", "--dt", "0.5,0.25,0.125,0.0625", "--assert-order"], dir.path());
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    // AB8 is far from its asymptotic regime at these step sizes
    let bad = odeflow(&["converge-sig", "--stepper", "ab8", "--dt", "0.5,0.25,0.125", "--assert-order"], dir.path());
    assert_eq!(bad.status.code(), Some(1), "{}", String::from_utf8_lossy(&bad.stdout));
}

#[test]
fn invalid_arguments_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let increasing = odeflow(&["converge-sig", "--dt", "0.25,0.5"], dir.path());
    assert_eq!(increasing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&increasing.stderr).contains("strictly decreasing"));
    let unknown = odeflow(&["converge-sig", "--stepper", "rk5"], dir.path());
    assert_eq!(unknown.status.code(), Some(2));
}

#[test]
fn grayscott_writes_snapshots_and_step_times() {
    let dir = tempfile::tempdir().unwrap();
    let out = odeflow(&["grayscott", "--dims", "8,8,8", "--tf", "4", "--snapshot-every", "2", "--workers", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for step in [0, 2, 4] {
        let vtk = std::fs::read_to_string(dir.path().join(format!("snapshot_t{step}.vtk"))).unwrap();
        assert!(vtk.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(vtk.contains("DIMENSIONS 8 8 8\nORIGIN 0 0 0\nSPACING 0.3125 0.3125 0.3125\nPOINT_DATA 512\n"));
        assert!(vtk.contains("SCALARS C1 double 1\nLOOKUP_TABLE default\n"));
    }
    let steps = std::fs::read_to_string(dir.path().join("steps.csv")).unwrap();
    assert_eq!(steps.lines().next(), Some("step,t,seconds"));
    assert_eq!(steps.lines().count(), 5);
}

#[test]
fn scale_writes_timing_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = odeflow(&["scale", "--dims", "16,16", "--workers", "1,2", "--dt", "0.5", "--runs", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("timing.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "workers,run,seconds");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("1,0,") && lines[4].starts_with("2,1,"));
}
