//! Symmetric Nanbu DSMC solver for one realization `z` of the uncertainty.
//!
//! Time is measured in the scaled variable of the quasi-invariant limit, so a
//! step of length `Δt` selects on average `N Δt / (2 ε)` disjoint pairs and
//! `Δt = ε` pairs every particle once.

mod stream;

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::{admissible_noise_bound, apply_interaction, sample_noise, ModelSpec};

pub use stream::{Purpose, RngStreamSpec, StreamKey};

/// Stochastic rounding: `⌊x⌋ + 1` with probability `x - ⌊x⌋`, else `⌊x⌋`.
pub fn sround<R: Rng + ?Sized>(x: f64, rng: &mut R) -> Result<u64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Argument(format!(
            "stochastic rounding needs a finite nonnegative argument, got {x}"
        )));
    }
    let floor = x.floor();
    let frac = x - floor;
    let up = frac > 0.0 && rng.random::<f64>() < frac;
    Ok(floor as u64 + u64::from(up))
}

/// N agent states for one node `z`, together with the stream that drives them.
#[derive(Debug, Clone)]
pub struct ParticleEnsemble {
    pub values: Vec<f64>,
    pub z: f64,
    pub t: f64,
    rng: ChaCha8Rng,
    order: Vec<u32>,
}

impl ParticleEnsemble {
    /// Wraps existing states. Fails on fewer than two particles.
    pub fn from_values(values: Vec<f64>, z: f64, rng: ChaCha8Rng) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::Argument(format!(
                "an ensemble needs at least two particles, got {}",
                values.len()
            )));
        }
        if values.len() > u32::MAX as usize {
            return Err(Error::Argument("ensemble too large".into()));
        }
        let order = (0..values.len() as u32).collect();
        Ok(Self {
            values,
            z,
            t: 0.0,
            rng,
            order,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One state per row under a `state` header.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(
            std::fs::File::create(path).map_err(|e| Error::io(path, e))?,
        );
        let mut body = String::with_capacity(24 * self.values.len() + 8);
        body.push_str("state\n");
        for v in &self.values {
            body.push_str(&format!("{v:e}\n"));
        }
        out.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Draws `n` i.i.d. particles from `f0(·, z)`; `t = 0`.
pub fn sample_initial(model: &ModelSpec, n: usize, z: f64, mut rng: ChaCha8Rng) -> Result<ParticleEnsemble> {
    if n < 2 {
        return Err(Error::Argument(format!("DSMC needs N >= 2, got {n}")));
    }
    model.check_uncertainty(z)?;
    let values = model.initial.sample(z, &model.domain, n, &mut rng)?;
    ParticleEnsemble::from_values(values, z, rng)
}

/// Moves `2 * pairs` uniformly chosen distinct indices to the front of
/// `order` and returns them; consecutive entries form the pairs.
pub fn select_pairs<'a, R: Rng + ?Sized>(order: &'a mut [u32], pairs: usize, rng: &mut R) -> &'a [u32] {
    let (chosen, _) = order.partial_shuffle(rng, 2 * pairs);
    chosen
}

/// Diagnostics of one DSMC step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StepStats {
    pub pairs: usize,
    /// Noise draws whose support was shrunk by the admissibility bound.
    pub truncated_draws: usize,
    /// Largest variance deficit `ε σ² - b² / 3` seen in the step.
    pub max_variance_deficit: f64,
}

impl StepStats {
    fn merge(&mut self, other: StepStats) {
        self.pairs += other.pairs;
        self.truncated_draws += other.truncated_draws;
        self.max_variance_deficit = self.max_variance_deficit.max(other.max_variance_deficit);
    }
}

/// Advances the ensemble by `dt` (scaled time) with `0 < dt <= ε`.
pub fn dsmc_step(ens: &mut ParticleEnsemble, model: &ModelSpec, dt: f64, eps: f64) -> Result<StepStats> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0, 1], got {eps}")));
    }
    if !(dt > 0.0) || dt > eps * (1.0 + 1e-12) {
        return Err(Error::Stability(format!(
            "DSMC time step {dt} must satisfy 0 < dt <= epsilon = {eps}"
        )));
    }
    let n = ens.values.len();
    let half = n / 2;
    // odd N at dt = ε: one particle stays unpaired
    let expected = (0.5 * n as f64 * (dt / eps).min(1.0)).min(half as f64);
    let nc = sround(expected, &mut ens.rng)? as usize;
    if nc > half {
        return Err(Error::InvariantViolation(format!(
            "selected {nc} pairs from {n} particles"
        )));
    }
    let z = ens.z;
    let half_width = model.noise.half_width(eps);
    let mut stats = StepStats {
        pairs: nc,
        ..StepStats::default()
    };
    let ParticleEnsemble {
        values, rng, order, ..
    } = ens;
    let chosen = select_pairs(order, nc, rng);
    for pair in chosen.chunks_exact(2) {
        let (i, j) = (pair[0] as usize, pair[1] as usize);
        let (v, w) = (values[i], values[j]);
        let bound = admissible_noise_bound(v, w, z, eps, model);
        if bound < half_width {
            stats.truncated_draws += 2;
            stats.max_variance_deficit = stats
                .max_variance_deficit
                .max(model.noise.variance_deficit(bound, eps));
        }
        let eta_v = sample_noise(bound, eps, model, rng);
        let eta_w = sample_noise(bound, eps, model, rng);
        let (vp, wp) = apply_interaction(v, w, z, eta_v, eta_w, eps, model)?;
        values[i] = vp;
        values[j] = wp;
    }
    ens.t += dt;
    Ok(stats)
}

/// Number of steps of length `ε` needed to reach `t_final`.
pub fn step_count(t_final: f64, eps: f64) -> usize {
    if t_final <= 0.0 {
        return 0;
    }
    (t_final / eps - 1e-9).ceil().max(0.0) as usize
}

/// Nearest step boundary of a requested snapshot time, capped at `n_steps`.
pub fn snapshot_step(t: f64, eps: f64, n_steps: usize) -> usize {
    ((t / eps).round().max(0.0) as usize).min(n_steps)
}

/// Ensemble captured at a step boundary.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub requested_time: f64,
    pub ensemble: ParticleEnsemble,
}

impl Snapshot {
    /// Difference between the realized and the requested time.
    pub fn time_mismatch(&self) -> f64 {
        self.ensemble.t - self.requested_time
    }
}

/// Summary of a complete DSMC run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub totals: StepStats,
}

fn check_snapshots(snapshots: &[f64], t_final: f64) -> Result<()> {
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::Argument(format!("final time must be nonnegative, got {t_final}")));
    }
    if snapshots.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("snapshot times must be sorted".into()));
    }
    if snapshots.iter().any(|&t| t < 0.0 || t > t_final * (1.0 + 1e-12)) {
        return Err(Error::Argument(format!(
            "snapshot times must lie in [0, {t_final}]"
        )));
    }
    Ok(())
}

/// Runs Nanbu-type DSMC with `Δt = ε` and hands every snapshot to `visit`
/// without copying the ensemble.
#[allow(clippy::too_many_arguments)]
pub fn run_dsmc_with<F>(
    model: &ModelSpec,
    n: usize,
    z: f64,
    eps: f64,
    t_final: f64,
    stream: &RngStreamSpec,
    snapshots: &[f64],
    mut visit: F,
) -> Result<RunStats>
where
    F: FnMut(usize, f64, &ParticleEnsemble) -> Result<()>,
{
    check_snapshots(snapshots, t_final)?;
    let mut ens = sample_initial(model, n, z, stream.rng())?;
    let n_steps = step_count(t_final, eps);
    let targets: Vec<usize> = snapshots.iter().map(|&t| snapshot_step(t, eps, n_steps)).collect();
    let mut next = 0;
    let mut stats = RunStats::default();
    for step in 0..=n_steps {
        if step > 0 {
            let s = dsmc_step(&mut ens, model, eps, eps)?;
            stats.totals.merge(s);
            stats.steps += 1;
            ens.t = step as f64 * eps;
        }
        while next < targets.len() && targets[next] == step {
            visit(next, snapshots[next], &ens)?;
            next += 1;
        }
    }
    Ok(stats)
}

/// Runs the solver and returns copies of the ensemble at each snapshot time.
pub fn run_dsmc(
    model: &ModelSpec,
    n: usize,
    z: f64,
    eps: f64,
    t_final: f64,
    stream: &RngStreamSpec,
    snapshots: &[f64],
) -> Result<Vec<Snapshot>> {
    let mut out = Vec::with_capacity(snapshots.len());
    run_dsmc_with(model, n, z, eps, t_final, stream, snapshots, |_, requested, ens| {
        out.push(Snapshot {
            requested_time: requested,
            ensemble: ens.clone(),
        });
        Ok(())
    })?;
    Ok(out)
}
