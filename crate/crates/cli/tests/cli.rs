use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn petc(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_petc")).current_dir(dir).args(args).output().expect("spawn petc")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = petc(dir.path(), &["simulate", "--out", "run"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["trajectory.csv", "events.csv", "summary.json", "effective_config.toml"] {
        assert!(dir.path().join("run").join(f).is_file(), "missing {f}");
    }
    let events = fs::read_to_string(dir.path().join("run/events.csv")).unwrap();
    assert!(events.lines().count() > 2);
}

#[test]
fn miet_orders_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = petc(dir.path(), &["miet", "--out", "m"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("m/miet.json")).unwrap()).unwrap();
    let (d, p) = (report["tau_d"].as_f64().unwrap(), report["tau_p"].as_f64().unwrap());
    assert!((p - 0.360518313).abs() < 1e-6 && d < p);
    let curve = fs::read_to_string(dir.path().join("m/lambda_min.csv")).unwrap();
    assert!(curve.lines().count() > 100);
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "[policy]\nkind = \"derivative\"\n[sim]\nhorizon = 2\n").unwrap();
    let o = petc(dir.path(), &["simulate", "--config", "run.toml", "--set", "horizon=3", "--out", "o"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let echo = fs::read_to_string(dir.path().join("o/effective_config.toml")).unwrap();
    assert!(echo.contains("kind = \"derivative\""));
    assert!(echo.contains("horizon = 3.0"));
}

#[test]
fn misspelled_key_suggests_fix() {
    let dir = tempfile::tempdir().unwrap();
    let o = petc(dir.path(), &["simulate", "--set", "spec.rr=0.3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("did you mean `spec.r`?"), "{}", stderr(&o));
}

#[test]
fn nonpositive_rate_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = petc(dir.path(), &["miet", "--set", "r=-1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("must be positive"), "{}", stderr(&o));
}

#[test]
fn unstable_gain_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = petc(dir.path(), &["simulate", "--set", "system.k=[[0.5]]"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn consensus_check_reads_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("ring.txt"), "# ring\n1 2\n2 3\n3 1\n").unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "[consensus]\nedges = \"ring.txt\"\nw0 = [1.0, 0.0, -1.0]\nrho = 5.0\nhorizon = 4.0\n",
    )
    .unwrap();
    let o = petc(dir.path(), &["consensus-check", "--config", "c.toml", "--out", "c"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("c/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["within_bound"], true);
    assert!((summary["lambda2"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn consensus_check_rejects_wrong_agent_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = petc(dir.path(), &["consensus-check", "--set", "n_agents=3"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| ["simulate", "--set", "policy.kind=dynamic", "--set", "spec.kind=online", "--seed", "9", "--out", out];
    assert!(petc(dir.path(), &args("a")).status.success());
    assert!(petc(dir.path(), &args("b")).status.success());
    for f in ["trajectory.csv", "events.csv", "summary.json"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(dir.path().join("b").join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn small_benchmark_reports_every_design() {
    let dir = tempfile::tempdir().unwrap();
    let o = petc(
        dir.path(),
        &["benchmark", "platoon", "--set", "n_trials=2", "--set", "platoon.horizon=2", "--trajectories", "--out", "b"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = fs::read_to_string(dir.path().join("b/table.csv")).unwrap();
    assert_eq!(table.lines().count(), 6, "{table}");
    assert!(dir.path().join("b/report.json").is_file());
    assert!(dir.path().join("b/trajectory_barrier.csv").is_file());
}
