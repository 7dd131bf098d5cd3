use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    budget_max_mmf, collocation_mean, cv_estimate, optimal_lambda_hat, CollocationRule, CostLedger, CvEstimate,
    EstimatorKind, LambdaPolicy, QoISampleSet,
};
use crate::dsmc::{run_dsmc_with, snapshot_step, step_count, Purpose, RngStreamSpec, RunStats, StreamKey};
use crate::error::{Error, Result};
use crate::meanfield::{fp_snapshot_step, run_fp_with, Grid1D, SteadyState, SteadyStateParams};
use crate::models::ModelSpec;
use crate::qoi::{resample_density, steady_state_cells, CellField, Qoi};

/// `[snapshot][qoi][cell]` values of one run.
pub type SnapshotQois = Vec<Vec<Vec<f64>>>;

/// Everything fixed across the nodes of one MC / MFCV estimate.
#[derive(Debug, Clone)]
pub struct MfcvSetup {
    pub model: ModelSpec,
    /// Particles per DSMC run.
    pub n: usize,
    /// Cells of the mean-field grid.
    pub n_mf: usize,
    /// Nodes used to estimate the MFCV control mean.
    pub m_mf: usize,
    /// Ratio `Δt_MF / ε`.
    pub k: u32,
    pub eps: f64,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub qois: Vec<Qoi>,
    /// Cells of the reconstruction grid.
    pub n_z: usize,
    pub seed: u64,
    pub collocation_nodes: usize,
}

impl MfcvSetup {
    pub fn reconstruction_grid(&self) -> Result<Grid1D> {
        Grid1D::window(&self.model, self.n_z)
    }

    pub fn fp_grid(&self) -> Result<Grid1D> {
        Grid1D::for_model(&self.model, self.n_mf)
    }

    pub fn dt_mf(&self) -> f64 {
        self.k as f64 * self.eps
    }

    /// Rejects `M_MF` above `⌊k N M / N_MF⌋`.
    pub fn check_budget(&self, m: usize) -> Result<()> {
        let bound = budget_max_mmf(self.n, m, self.n_mf, self.k)?;
        if self.m_mf > bound {
            return Err(Error::Configuration(format!(
                "M_MF = {} exceeds the cost bound floor(k N M / N_MF) = {bound} (N = {}, M = {m}, N_MF = {}, k = {})",
                self.m_mf, self.n, self.n_mf, self.k
            )));
        }
        Ok(())
    }

    /// `M` i.i.d. nodes; a smaller `M` draws a prefix of a larger one.
    pub fn nodes(&self, replication: u32, m: usize, purpose: Purpose) -> Vec<f64> {
        let mut rng = self.stream(replication, 0, purpose).rng();
        (0..m).map(|_| self.model.uncertainty.sample(&mut rng)).collect()
    }

    /// QoIs of the analytic steady state at `z`, one vector per QoI.
    pub fn steady_qois(&self, z: f64) -> Result<Vec<Vec<f64>>> {
        let grid = self.reconstruction_grid()?;
        let state = SteadyState::new(SteadyStateParams::for_model(&self.model, z)?)?;
        let cells = steady_state_cells(&state, &grid);
        let field = CellField::new(grid, &cells)?;
        self.qois.iter().map(|q| q.eval_field(&field)).collect()
    }

    /// QoIs of the mean-field solution at `z`, indexed `[snapshot][qoi]`.
    pub fn mean_field_qois(&self, z: f64) -> Result<Vec<Vec<Vec<f64>>>> {
        self.mean_field_qois_on(z, self.fp_grid()?, self.dt_mf())
    }

    /// As [`Self::mean_field_qois`] on an explicit FP grid and step.
    pub fn mean_field_qois_on(&self, z: f64, grid: Grid1D, dt: f64) -> Result<Vec<Vec<Vec<f64>>>> {
        let recon = self.reconstruction_grid()?;
        let mut out = Vec::with_capacity(self.snapshots.len());
        run_fp_with(&self.model, grid, z, self.t_final, dt, &self.snapshots, |_, f| {
            let cells = resample_density(f, &recon);
            let field = CellField::new(recon, &cells)?;
            out.push(self.qois.iter().map(|q| q.eval_field(&field)).collect::<Result<Vec<_>>>()?);
            Ok(())
        })?;
        Ok(out)
    }

    /// QoIs of one DSMC run at `z`, indexed `[snapshot][qoi]`.
    pub fn kinetic_qois(&self, z: f64, stream: &RngStreamSpec) -> Result<Vec<Vec<Vec<f64>>>> {
        Ok(self.kinetic_run(z, stream)?.0)
    }

    fn kinetic_run(&self, z: f64, stream: &RngStreamSpec) -> Result<(SnapshotQois, usize, RunStats)> {
        let recon = self.reconstruction_grid()?;
        let mut out = Vec::with_capacity(self.snapshots.len());
        let mut out_of_window = 0;
        let stats = run_dsmc_with(&self.model, self.n, z, self.eps, self.t_final, stream, &self.snapshots, |_, _, ens| {
            out_of_window += ens.values.iter().filter(|&&w| recon.locate(w).is_none()).count();
            out.push(
                self.qois
                    .iter()
                    .map(|q| q.eval_particles(&ens.values, &recon))
                    .collect::<Result<Vec<_>>>()?,
            );
            Ok(())
        })?;
        Ok((out, out_of_window, stats))
    }

    pub fn stream(&self, replication: u32, sample: usize, purpose: Purpose) -> RngStreamSpec {
        RngStreamSpec::new(self.seed, StreamKey::new(replication, sample as u32, purpose))
    }

    /// Expected steady-state QoIs by collocation.
    pub fn steady_control_mean(&self) -> Result<Vec<Vec<f64>>> {
        let rule = CollocationRule::new(self.collocation_nodes, &self.model.uncertainty)?;
        let flat = collocation_mean(|z| Ok(self.steady_qois(z)?.concat()), &rule)?;
        self.split(&flat)
    }

    fn split(&self, flat: &[f64]) -> Result<Vec<Vec<f64>>> {
        let grid = self.reconstruction_grid()?;
        let mut out = Vec::with_capacity(self.qois.len());
        let mut offset = 0;
        for q in &self.qois {
            let w = q.len(&grid);
            out.push(flat[offset..offset + w].to_vec());
            offset += w;
        }
        Ok(out)
    }
}

/// A control mean with its sampling error (absent when computed by collocation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlMean {
    pub value: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

/// Run-time diagnostics accumulated over the nodes of one replication.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    /// Realized minus requested time of each DSMC snapshot.
    pub dsmc_time_offset: Vec<f64>,
    /// Offset of the mean-field snapshot used as control (≤ 0).
    pub fp_time_offset: Vec<f64>,
    /// Particles outside the reconstruction window, summed over nodes and snapshots.
    pub out_of_window: usize,
    pub truncated_noise_draws: usize,
    pub max_variance_deficit: f64,
}

struct NodeOutput {
    primary: Vec<Vec<Vec<f64>>>,
    steady: Option<Vec<Vec<f64>>>,
    mean_field: Option<Vec<Vec<Vec<f64>>>>,
    out_of_window: usize,
    truncated: usize,
    deficit: f64,
}

/// Primary and control samples of one replication, at `M` shared nodes.
#[derive(Debug, Clone)]
pub struct ReplicationSamples {
    pub replication: u32,
    pub nodes: Vec<f64>,
    /// `[snapshot][qoi]`
    pub primary: Vec<Vec<QoISampleSet>>,
    /// `[qoi]`, evaluated at the same nodes as the primary.
    pub steady_control: Option<Vec<QoISampleSet>>,
    pub steady_mean: Option<Vec<ControlMean>>,
    /// `[snapshot][qoi]`, evaluated at the same nodes as the primary.
    pub mean_field_control: Option<Vec<Vec<QoISampleSet>>>,
    /// `[snapshot][qoi]`, from `M_MF` nodes independent of the primary ones.
    pub mean_field_mean: Option<Vec<Vec<ControlMean>>>,
    pub diagnostics: SampleDiagnostics,
}

fn transpose(
    per_node: Vec<Vec<Vec<Vec<f64>>>>,
    nodes: &[f64],
    snapshots: usize,
    qois: usize,
) -> Result<Vec<Vec<QoISampleSet>>> {
    let mut out = Vec::with_capacity(snapshots);
    for s in 0..snapshots {
        let mut row = Vec::with_capacity(qois);
        for q in 0..qois {
            let entries = per_node.iter().map(|n| n[s][q].clone()).collect();
            row.push(QoISampleSet::new(entries, nodes.to_vec())?);
        }
        out.push(row);
    }
    Ok(out)
}

fn mean_with_stderr(samples: &[Vec<f64>]) -> ControlMean {
    let m = samples.len() as f64;
    let width = samples.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; width];
    for s in samples {
        for (a, v) in mean.iter_mut().zip(s) {
            *a += v / m;
        }
    }
    let mut var = vec![0.0; width];
    if samples.len() > 1 {
        for s in samples {
            for ((a, v), mu) in var.iter_mut().zip(s).zip(&mean) {
                *a += (v - mu) * (v - mu);
            }
        }
        var.iter_mut().for_each(|v| *v /= m - 1.0);
    }
    ControlMean {
        value: mean,
        stderr: Some(var.iter().map(|v| (v / m).sqrt()).collect()),
    }
}

impl ReplicationSamples {
    /// Runs DSMC (and the requested controls) at `m` nodes of replication `replication`.
    pub fn collect(setup: &MfcvSetup, replication: u32, m: usize, kinds: &[EstimatorKind]) -> Result<Self> {
        if m == 0 {
            return Err(Error::Argument("at least one node is required".into()));
        }
        let want_steady = kinds.contains(&EstimatorKind::MfcvS);
        let want_mf = kinds.contains(&EstimatorKind::Mfcv);
        if want_mf {
            setup.check_budget(m)?;
        }
        let nodes = setup.nodes(replication, m, Purpose::Nodes);
        let per_node: Vec<NodeOutput> = nodes
            .par_iter()
            .enumerate()
            .map(|(k, &z)| {
                let (primary, out_of_window, stats) =
                    setup.kinetic_run(z, &setup.stream(replication, k, Purpose::Particles))?;
                Ok(NodeOutput {
                    primary,
                    steady: if want_steady { Some(setup.steady_qois(z)?) } else { None },
                    mean_field: if want_mf { Some(setup.mean_field_qois(z)?) } else { None },
                    out_of_window,
                    truncated: stats.totals.truncated_draws,
                    deficit: stats.totals.max_variance_deficit,
                })
            })
            .collect::<Result<_>>()?;

        let (ns, nq) = (setup.snapshots.len(), setup.qois.len());
        let n_steps = step_count(setup.t_final, setup.eps);
        let mut diagnostics = SampleDiagnostics {
            dsmc_time_offset: setup
                .snapshots
                .iter()
                .map(|&t| snapshot_step(t, setup.eps, n_steps) as f64 * setup.eps - t)
                .collect(),
            fp_time_offset: if want_mf {
                setup
                    .snapshots
                    .iter()
                    .map(|&t| fp_snapshot_step(t, setup.dt_mf()) as f64 * setup.dt_mf() - t)
                    .collect()
            } else {
                Vec::new()
            },
            ..SampleDiagnostics::default()
        };
        for o in &per_node {
            diagnostics.out_of_window += o.out_of_window;
            diagnostics.truncated_noise_draws += o.truncated;
            diagnostics.max_variance_deficit = diagnostics.max_variance_deficit.max(o.deficit);
        }

        let mut primary_raw = Vec::with_capacity(m);
        let mut steady_raw = Vec::new();
        let mut mf_raw = Vec::new();
        for o in per_node {
            primary_raw.push(o.primary);
            if let Some(s) = o.steady {
                steady_raw.push(s);
            }
            if let Some(f) = o.mean_field {
                mf_raw.push(f);
            }
        }
        let primary = transpose(primary_raw, &nodes, ns, nq)?;

        let (steady_control, steady_mean) = if want_steady {
            let wrapped: Vec<Vec<Vec<Vec<f64>>>> = steady_raw.into_iter().map(|s| vec![s]).collect();
            let control = transpose(wrapped, &nodes, 1, nq)?.remove(0);
            let mean = setup
                .steady_control_mean()?
                .into_iter()
                .map(|value| ControlMean { value, stderr: None })
                .collect();
            (Some(control), Some(mean))
        } else {
            (None, None)
        };

        let (mean_field_control, mean_field_mean) = if want_mf {
            let control = transpose(mf_raw, &nodes, ns, nq)?;
            let fresh = setup.nodes(replication, setup.m_mf, Purpose::ControlNodes);
            let evaluations: Vec<Vec<Vec<Vec<f64>>>> =
                fresh.par_iter().map(|&z| setup.mean_field_qois(z)).collect::<Result<_>>()?;
            let means = (0..ns)
                .map(|s| {
                    (0..nq)
                        .map(|q| {
                            let col: Vec<Vec<f64>> = evaluations.iter().map(|e| e[s][q].clone()).collect();
                            mean_with_stderr(&col)
                        })
                        .collect()
                })
                .collect();
            (Some(control), Some(means))
        } else {
            (None, None)
        };

        Ok(Self {
            replication,
            nodes,
            primary,
            steady_control,
            steady_mean,
            mean_field_control,
            mean_field_mean,
            diagnostics,
        })
    }

    /// Estimate of QoI `qoi` at snapshot `snapshot` from the first `m` nodes.
    pub fn estimate(
        &self,
        setup: &MfcvSetup,
        kind: EstimatorKind,
        m: usize,
        snapshot: usize,
        qoi: usize,
        policy: LambdaPolicy,
    ) -> Result<CvEstimate> {
        let primary = self
            .primary
            .get(snapshot)
            .and_then(|row| row.get(qoi))
            .ok_or_else(|| Error::Argument(format!("no samples for snapshot {snapshot}, QoI {qoi}")))?
            .prefix(m)?;
        let missing = |what: &str| Error::Argument(format!("{what} control was not collected for this replication"));
        let (control, mean, n_mf, m_mf) = match kind {
            EstimatorKind::Mc => {
                let mut est = CvEstimate::monte_carlo(&primary)?;
                est.cost = CostLedger {
                    n: setup.n,
                    m,
                    ..CostLedger::default()
                };
                return Ok(est);
            }
            EstimatorKind::MfcvS => (
                self.steady_control.as_ref().ok_or_else(|| missing("steady-state"))?[qoi].prefix(m)?,
                &self.steady_mean.as_ref().ok_or_else(|| missing("steady-state"))?[qoi],
                0,
                0,
            ),
            EstimatorKind::Mfcv => {
                setup.check_budget(m)?;
                (
                    self.mean_field_control.as_ref().ok_or_else(|| missing("mean-field"))?[snapshot][qoi].prefix(m)?,
                    &self.mean_field_mean.as_ref().ok_or_else(|| missing("mean-field"))?[snapshot][qoi],
                    setup.n_mf,
                    setup.m_mf,
                )
            }
        };
        let lambda = match policy {
            LambdaPolicy::Optimal => optimal_lambda_hat(&primary, &control, &mean.value)?,
            LambdaPolicy::Fixed(l) => vec![l; primary.width()],
        };
        let mut est = cv_estimate(&primary, &control, &mean.value, &lambda)?;
        est.control_mean_stderr = mean.stderr.clone();
        est.cost = CostLedger {
            n: setup.n,
            m,
            n_mf,
            m_mf,
            k: setup.k,
        };
        Ok(est)
    }
}

/// One replication of MC / MFCV-S / MFCV with `m` nodes; estimates indexed `[snapshot][qoi]`.
pub fn run_mfcv(
    setup: &MfcvSetup,
    kind: EstimatorKind,
    m: usize,
    replication: u32,
    policy: LambdaPolicy,
) -> Result<Vec<Vec<CvEstimate>>> {
    let samples = ReplicationSamples::collect(setup, replication, m, &[kind])?;
    (0..setup.snapshots.len())
        .map(|s| {
            (0..setup.qois.len())
                .map(|q| samples.estimate(setup, kind, m, s, q, policy))
                .collect()
        })
        .collect()
}
