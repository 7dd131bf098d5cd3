use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SCENARIO: &str = r#"
[model]
key = "wealth-B"

[solver]
N = 300
eps = 0.1
t_final = 0.3
snapshots = [0.1, 0.3]
N_MF = 20
N_Z = 25

[uq]
kinds = ["MC", "MFCV-S", "MFCV"]
M = [2, 4]
M_MF = 10
replications = 2
qois = ["density", "lorenz", "gini", "moment:1"]
"#;

fn kinetic_uq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinetic-uq"))
        .args(args)
        .env("KINETIC_UQ_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn catalog_lists_every_model() {
    let out = kinetic_uq(&["catalog"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for key in ["opinion-A", "opinion-B", "wealth-A", "wealth-B", "bounded-confidence"] {
        assert!(text.contains(key), "{text}");
    }
}

#[test]
fn run_writes_reproducible_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), SCENARIO);
    let a = tmp.path().join("a");
    let run = |threads: &str| {
        let out = kinetic_uq(&["run", &scenario, "--out", a.to_str().unwrap(), "--seed", "5", "--threads", threads]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    let names = ["report.json", "error_vs_M.csv", "error_vs_t.csv", "lorenz.csv", "density.csv"];
    run("1");
    let first: Vec<String> = names.iter().map(|n| fs::read_to_string(a.join(n)).unwrap()).collect();
    run("3");
    for (name, before) in names.iter().zip(&first) {
        assert!(*before == fs::read_to_string(a.join(name)).unwrap(), "{name} differs between thread counts");
    }
    let by_m = fs::read_to_string(a.join("error_vs_M.csv")).unwrap();
    let mut lines = by_m.lines();
    assert_eq!(lines.next(), Some("kind,M,L2_error,stderr"));
    assert_eq!(lines.count(), 3 * 2);
    let by_t = fs::read_to_string(a.join("error_vs_t.csv")).unwrap();
    assert_eq!(by_t.lines().count(), 1 + 3 * 2 * 2 * 4);
    assert!(fs::read_to_string(a.join("lorenz.csv")).unwrap().contains("\nreference,0,"));
    let report = fs::read_to_string(a.join("report.json")).unwrap();
    assert!(report.contains("\"config_hash\"") && report.contains("\"seed\": 5"));
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad_key = write_scenario(tmp.path(), &SCENARIO.replace("eps = 0.1", "eps = 0.1\nepsilon = 0.1"));
    let out = kinetic_uq(&["run", &bad_key, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));

    let over_budget = write_scenario(tmp.path(), &SCENARIO.replace("M_MF = 10", "M_MF = 31"));
    let out = kinetic_uq(&["run", &over_budget, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("30"));
}

#[test]
fn replication_override_is_validated() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), SCENARIO);
    let out = kinetic_uq(&["run", &scenario, "--replications", "0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_scenario_file_is_an_io_error() {
    let out = kinetic_uq(&["run", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_runs_selected_criteria() {
    let out = kinetic_uq(&["verify", "--criterion", "9", "--criterion", "10"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2, "{text}");
    assert_eq!(kinetic_uq(&["verify", "--criterion", "11"]).status.code(), Some(2));
}
