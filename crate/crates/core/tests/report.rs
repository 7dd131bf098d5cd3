use std::fs;

use kinetic_uq::harness::{
    emit_report, parse_scenario, run_experiment, ExperimentReport, DENSITY_HEADER, ERROR_VS_M_HEADER,
    ERROR_VS_T_HEADER, LORENZ_HEADER,
};

fn wealth_report() -> ExperimentReport {
    let spec = parse_scenario(
        r#"
[model]
key = "wealth-A"
[solver]
N = 500
eps = 0.1
t_final = 0.5
N_MF = 40
N_Z = 40
[uq]
kinds = ["MC", "MFCV-S", "MFCV"]
M = [3, 5]
M_MF = 20
replications = 3
seed = 11
qois = ["density", "lorenz", "gini", "tail-index", "tail:2", "moment:2"]
reference = "mean-field"
"#,
    )
    .unwrap();
    run_experiment(&spec).unwrap()
}

#[test]
fn every_numeric_field_is_finite() {
    let report = wealth_report();
    serde_json::to_string(&report).unwrap();
    for p in &report.points {
        for v in [p.error, p.stderr, p.lambda_mean, p.rho_mean, p.variance_factor_mean] {
            assert!(v.is_finite(), "{p:?}");
        }
        assert!(p.mean_estimate.iter().all(|v| v.is_finite()));
    }
    let mu = report.parametric_tail_index.expect("wealth model has a parametric tail index");
    assert!(mu > 1.0);
    assert_eq!(report.points.len(), 3 * 2 * 6);
}

#[test]
fn emitting_twice_gives_identical_files() {
    let report = wealth_report();
    let dir = tempfile::tempdir().unwrap();
    let names = ["report.json", "error_vs_M.csv", "error_vs_t.csv", "lorenz.csv", "density.csv"];
    emit_report(&report, dir.path()).unwrap();
    let first: Vec<Vec<u8>> = names.iter().map(|n| fs::read(dir.path().join(n)).unwrap()).collect();
    emit_report(&wealth_report(), dir.path()).unwrap();
    for (n, before) in names.iter().zip(first) {
        assert_eq!(before, fs::read(dir.path().join(n)).unwrap(), "{n}");
    }
    let lorenz = fs::read_to_string(dir.path().join("lorenz.csv")).unwrap();
    assert!(lorenz.starts_with(LORENZ_HEADER));
    assert_eq!(lorenz.lines().count(), 1 + (3 + 1) * 101);
}

#[test]
fn empty_sweep_gives_header_only_tables() {
    let mut report = wealth_report();
    report.points.clear();
    let dir = tempfile::tempdir().unwrap();
    emit_report(&report, dir.path()).unwrap();
    for (name, header) in [
        ("error_vs_M.csv", ERROR_VS_M_HEADER),
        ("error_vs_t.csv", ERROR_VS_T_HEADER),
        ("lorenz.csv", LORENZ_HEADER),
        ("density.csv", DENSITY_HEADER),
    ] {
        assert_eq!(fs::read_to_string(dir.path().join(name)).unwrap(), format!("{header}\n"));
    }
}

#[test]
fn unwritable_directory_is_an_io_error_with_the_path() {
    let report = wealth_report();
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let err = emit_report(&report, &blocker.join("sub")).unwrap_err();
    assert!(err.to_string().contains("file"), "{err}");
}
