use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::norms::error_with_stderr;
use super::scenario::{ReferenceKind, ScenarioSpec};
use crate::dsmc::Purpose;
use crate::error::{Error, Result};
use crate::meanfield::{Grid1D, SteadyStateParams};
use crate::qoi::{Qoi, LORENZ_POINTS};
use crate::uq::{collocation_mean, CollocationRule, CostLedger, CvEstimate, MfcvSetup, ReplicationSamples, SampleDiagnostics};

/// Per-snapshot, per-QoI reference values, indexed `[snapshot][qoi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub kind: ReferenceKind,
    pub label: String,
    pub values: Vec<Vec<Vec<f64>>>,
}

/// Error and λ/ρ summaries of one (kind, M, snapshot, QoI) point of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub kind: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub t: f64,
    pub qoi: String,
    pub error: f64,
    pub stderr: f64,
    pub lambda_mean: f64,
    pub rho_mean: f64,
    pub variance_factor_mean: f64,
    pub cost: CostLedger,
    /// Replication average of the estimate.
    pub mean_estimate: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config_hash: String,
    pub code_version: String,
    pub replications_completed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallTime {
    pub reference_seconds: f64,
    pub sampling_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    pub provenance: Provenance,
    pub scenario: ScenarioSpec,
    pub reconstruction_grid: Grid1D,
    pub reference: Option<Reference>,
    pub points: Vec<SweepPoint>,
    /// `E[μ(z)]` by collocation, reported next to the Hill estimates.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parametric_tail_index: Option<f64>,
    pub diagnostics: SampleDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<WallTime>,
}

impl ExperimentReport {
    pub fn point(&self, kind: &str, m: usize, t: f64, qoi: &str) -> Option<&SweepPoint> {
        self.points
            .iter()
            .find(|p| p.kind == kind && p.m == m && p.t == t && p.qoi == qoi)
    }
}

/// A failed experiment, with whatever was completed before the failure.
#[derive(Debug)]
pub struct ExperimentFailure {
    pub error: Error,
    pub partial: Option<Box<ExperimentReport>>,
}

impl fmt::Display for ExperimentFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

impl std::error::Error for ExperimentFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

impl From<ExperimentFailure> for Error {
    fn from(f: ExperimentFailure) -> Self {
        f.error
    }
}

impl From<Error> for ExperimentFailure {
    fn from(error: Error) -> Self {
        Self { error, partial: None }
    }
}

fn flatten(v: Vec<Vec<Vec<f64>>>) -> Vec<f64> {
    v.into_iter().flatten().flatten().collect()
}

fn unflatten(flat: &[f64], snapshots: usize, widths: &[usize]) -> Vec<Vec<Vec<f64>>> {
    let mut it = flat.iter().copied();
    (0..snapshots)
        .map(|_| widths.iter().map(|&w| it.by_ref().take(w).collect()).collect())
        .collect()
}

/// Quadrature weight of one entry of a QoI in the error norm.
pub fn qoi_weight(qoi: &Qoi, grid: &Grid1D) -> f64 {
    match qoi {
        Qoi::Density => grid.dw(),
        Qoi::Lorenz => 1.0 / (LORENZ_POINTS - 1) as f64,
        _ => 1.0,
    }
}

/// Reference values for the scenario's snapshots and QoIs.
pub fn compute_reference(spec: &ScenarioSpec, setup: &MfcvSetup) -> Result<Reference> {
    let kind = spec.uq.reference;
    let grid = setup.reconstruction_grid()?;
    let widths: Vec<usize> = setup.qois.iter().map(|q| q.len(&grid)).collect();
    let ns = setup.snapshots.len();
    let rule = CollocationRule::new(setup.collocation_nodes, &setup.model.uncertainty)?;
    let values = match kind {
        ReferenceKind::SteadyState => {
            let steady = setup.steady_control_mean()?;
            vec![steady; ns]
        }
        ReferenceKind::MeanField => {
            let fine = Grid1D::for_model(&setup.model, 4 * setup.n_mf)?;
            let dt = setup.dt_mf() / 4.0;
            let flat = collocation_mean(|z| Ok(flatten(setup.mean_field_qois_on(z, fine, dt)?)), &rule)?;
            unflatten(&flat, ns, &widths)
        }
        ReferenceKind::Kinetic => {
            let runs = spec.uq.reference_runs;
            let per_run: Vec<Vec<f64>> = (0..rule.nodes.len() * runs)
                .into_par_iter()
                .map(|j| {
                    let z = rule.nodes[j / runs];
                    Ok(flatten(setup.kinetic_qois(z, &setup.stream(0, j, Purpose::Reference))?))
                })
                .collect::<Result<_>>()?;
            let width = per_run.first().map_or(0, Vec::len);
            let mut acc = vec![0.0; width];
            for (j, v) in per_run.iter().enumerate() {
                let w = rule.weights[j / runs] / runs as f64;
                for (a, x) in acc.iter_mut().zip(v) {
                    *a += w * x;
                }
            }
            unflatten(&acc, ns, &widths)
        }
    };
    Ok(Reference {
        kind,
        label: kind.label().to_string(),
        values,
    })
}

/// Estimates of one replication, flattened in `(kind, M, snapshot, qoi)` order.
struct ReplicationOutcome {
    estimates: Vec<CvEstimate>,
    diagnostics: SampleDiagnostics,
}

fn replicate(spec: &ScenarioSpec, setup: &MfcvSetup, r: u32) -> Result<ReplicationOutcome> {
    let m_max = *spec.uq.m.last().expect("resolved scenario has M");
    let samples = ReplicationSamples::collect(setup, r, m_max, &spec.uq.kinds)?;
    let mut estimates = Vec::new();
    for &kind in &spec.uq.kinds {
        for &m in &spec.uq.m {
            for s in 0..setup.snapshots.len() {
                for q in 0..setup.qois.len() {
                    estimates.push(samples.estimate(setup, kind, m, s, q, spec.uq.lambda)?);
                }
            }
        }
    }
    Ok(ReplicationOutcome {
        estimates,
        diagnostics: samples.diagnostics,
    })
}

fn finite_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn merge_diagnostics(all: &[SampleDiagnostics]) -> SampleDiagnostics {
    let mut out = all.first().cloned().unwrap_or_default();
    for d in all.iter().skip(1) {
        out.out_of_window += d.out_of_window;
        out.truncated_noise_draws += d.truncated_noise_draws;
        out.max_variance_deficit = out.max_variance_deficit.max(d.max_variance_deficit);
    }
    out
}

fn parametric_tail_index(spec: &ScenarioSpec, setup: &MfcvSetup) -> Result<Option<f64>> {
    if !spec.uq.qois.contains(&Qoi::TailIndex) {
        return Ok(None);
    }
    let rule = CollocationRule::new(setup.collocation_nodes, &setup.model.uncertainty)?;
    match collocation_mean(|z| Ok(vec![SteadyStateParams::for_model(&setup.model, z)?.mu()]), &rule) {
        Ok(v) => Ok(Some(v[0])),
        Err(e) if e.is_configuration() => Ok(None),
        Err(e) => Err(e),
    }
}

/// Runs every replication of the scenario's sweep and tabulates errors
/// against the reference.
pub fn run_experiment(spec: &ScenarioSpec) -> std::result::Result<ExperimentReport, ExperimentFailure> {
    let mut spec = spec.clone();
    spec.resolve()?;
    let setup = spec.setup()?;
    let grid = setup.reconstruction_grid()?;

    let clock = Instant::now();
    let reference = compute_reference(&spec, &setup)?;
    let reference_seconds = clock.elapsed().as_secs_f64();
    let parametric = parametric_tail_index(&spec, &setup)?;

    let clock = Instant::now();
    let outcomes: Vec<Result<ReplicationOutcome>> = (0..spec.uq.replications as u32)
        .into_par_iter()
        .map(|r| replicate(&spec, &setup, r))
        .collect();
    let sampling_seconds = clock.elapsed().as_secs_f64();

    let mut failure = None;
    let mut done = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        match o {
            Ok(o) => done.push(o),
            Err(e) if failure.is_none() => failure = Some(e),
            Err(_) => {}
        }
    }

    let mut points = Vec::new();
    if !done.is_empty() {
        let mut idx = 0;
        for &kind in &spec.uq.kinds {
            for &m in &spec.uq.m {
                for (s, &t) in setup.snapshots.iter().enumerate() {
                    for (q, qoi) in setup.qois.iter().enumerate() {
                        let ests: Vec<&CvEstimate> = done.iter().map(|o| &o.estimates[idx]).collect();
                        idx += 1;
                        let values: Vec<Vec<f64>> = ests.iter().map(|e| e.value.clone()).collect();
                        let (error, stderr) = error_with_stderr(
                            &values,
                            &reference.values[s][q],
                            qoi_weight(qoi, &grid),
                            spec.uq.p,
                            spec.uq.norm,
                        )?;
                        let r = values.len() as f64;
                        let width = values[0].len();
                        let mean_estimate =
                            (0..width).map(|j| values.iter().map(|v| v[j]).sum::<f64>() / r).collect();
                        points.push(SweepPoint {
                            kind: kind.name().to_string(),
                            m,
                            t,
                            qoi: qoi.to_string(),
                            error,
                            stderr,
                            lambda_mean: finite_mean(ests.iter().flat_map(|e| e.lambda.iter().copied())),
                            rho_mean: finite_mean(ests.iter().flat_map(|e| e.rho.iter().copied())),
                            variance_factor_mean: finite_mean(
                                ests.iter().flat_map(|e| e.variance_factor.iter().copied()),
                            ),
                            cost: ests[0].cost,
                            mean_estimate,
                        });
                    }
                }
            }
        }
    }

    let diagnostics: Vec<SampleDiagnostics> = done.iter().map(|o| o.diagnostics.clone()).collect();
    let report = ExperimentReport {
        status: if failure.is_some() { "failed" } else { "ok" }.to_string(),
        failure: failure.as_ref().map(ToString::to_string),
        provenance: Provenance {
            seed: spec.uq.seed,
            config_hash: spec.config_hash(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            replications_completed: done.len(),
        },
        reconstruction_grid: grid,
        reference: Some(reference),
        points,
        parametric_tail_index: parametric,
        diagnostics: merge_diagnostics(&diagnostics),
        wall_time: spec.output.wall_time.then_some(WallTime {
            reference_seconds,
            sampling_seconds,
        }),
        scenario: spec,
    };
    match failure {
        Some(error) => Err(ExperimentFailure {
            error,
            partial: Some(Box::new(report)),
        }),
        None => Ok(report),
    }
}
