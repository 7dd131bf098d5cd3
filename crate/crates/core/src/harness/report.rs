use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::experiment::ExperimentReport;
use crate::error::{Error, Result};
use crate::qoi::LORENZ_POINTS;

pub const ERROR_VS_M_HEADER: &str = "kind,M,L2_error,stderr";
pub const ERROR_VS_T_HEADER: &str = "kind,M,t,qoi,L2_error,stderr";
pub const LORENZ_HEADER: &str = "kind,M,t,population,share";
pub const DENSITY_HEADER: &str = "kind,M,t,w,density";

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, body).map_err(|e| Error::io(&path, e))
}

/// `error_vs_M.csv`: the first QoI at the last snapshot, per kind and M.
pub fn error_vs_m_csv(report: &ExperimentReport) -> String {
    let mut out = format!("{ERROR_VS_M_HEADER}\n");
    let (Some(t), Some(qoi)) = (report.scenario.solver.snapshots.last(), report.scenario.uq.qois.first()) else {
        return out;
    };
    let qoi = qoi.to_string();
    for p in report.points.iter().filter(|p| p.t == *t && p.qoi == qoi) {
        let _ = writeln!(out, "{},{},{},{}", p.kind, p.m, p.error, p.stderr);
    }
    out
}

pub fn error_vs_t_csv(report: &ExperimentReport) -> String {
    let mut out = format!("{ERROR_VS_T_HEADER}\n");
    for p in &report.points {
        let _ = writeln!(out, "{},{},{},{},{},{}", p.kind, p.m, p.t, p.qoi, p.error, p.stderr);
    }
    out
}

/// Replication-averaged curves at the largest M, followed by the reference
/// (kind `reference`, M 0).
fn curve_csv(report: &ExperimentReport, header: &str, qoi: &str, abscissa: impl Fn(usize) -> f64) -> String {
    let mut out = format!("{header}\n");
    let Some(&m_max) = report.scenario.uq.m.last() else {
        return out;
    };
    for p in report.points.iter().filter(|p| p.qoi == qoi && p.m == m_max) {
        for (j, v) in p.mean_estimate.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{},{}", p.kind, p.m, p.t, abscissa(j), v);
        }
    }
    let (Some(reference), Some(q)) = (
        report.reference.as_ref(),
        report.scenario.uq.qois.iter().position(|q| q.to_string() == qoi),
    ) else {
        return out;
    };
    if report.points.iter().any(|p| p.qoi == qoi) {
        for (s, t) in report.scenario.solver.snapshots.iter().enumerate() {
            for (j, v) in reference.values[s][q].iter().enumerate() {
                let _ = writeln!(out, "reference,0,{},{},{}", t, abscissa(j), v);
            }
        }
    }
    out
}

pub fn lorenz_csv(report: &ExperimentReport) -> String {
    curve_csv(report, LORENZ_HEADER, "lorenz", |j| j as f64 / (LORENZ_POINTS - 1) as f64)
}

pub fn density_csv(report: &ExperimentReport) -> String {
    let grid = report.reconstruction_grid;
    curve_csv(report, DENSITY_HEADER, "density", |j| grid.center(j))
}

/// Writes `report.json` and the CSV tables into `dir`, creating it if needed.
pub fn emit_report(report: &ExperimentReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    write(dir, "report.json", &(json + "\n"))?;
    write(dir, "error_vs_M.csv", &error_vs_m_csv(report))?;
    write(dir, "error_vs_t.csv", &error_vs_t_csv(report))?;
    write(dir, "lorenz.csv", &lorenz_csv(report))?;
    write(dir, "density.csv", &density_csv(report))?;
    Ok(())
}
