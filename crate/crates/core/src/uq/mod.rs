//! Monte Carlo and control-variate estimators over the uncertainty `z`.

mod mfcv;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::UncertaintyLaw;
use crate::quadrature::GaussLegendre;

pub use mfcv::{run_mfcv, ControlMean, MfcvSetup, ReplicationSamples, SampleDiagnostics};

/// Default number of collocation nodes for exact control means.
pub const DEFAULT_COLLOCATION_NODES: usize = 20;

/// Relative variance below which a control is treated as degenerate and `λ̂* = 0`.
pub const LAMBDA_GUARD: f64 = 1e-24;

/// M evaluations of a scalar or field QoI at nodes `z_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct QoISampleSet {
    entries: Vec<Vec<f64>>,
    nodes: Vec<f64>,
}

impl QoISampleSet {
    /// `nodes` may be empty for synthetic data; otherwise it pairs with `entries`.
    pub fn new(entries: Vec<Vec<f64>>, nodes: Vec<f64>) -> Result<Self> {
        if !nodes.is_empty() && nodes.len() != entries.len() {
            return Err(Error::Argument(format!(
                "{} entries for {} nodes",
                entries.len(),
                nodes.len()
            )));
        }
        if let Some(first) = entries.first() {
            if entries.iter().any(|e| e.len() != first.len()) {
                return Err(Error::Argument("QoI entries must share one shape".into()));
            }
        }
        if entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("QoI sample contains a non-finite value".into()));
        }
        Ok(Self { entries, nodes })
    }

    /// Scalar samples without node labels.
    pub fn scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.iter().map(|&v| vec![v]).collect(), Vec::new())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries per sample.
    pub fn width(&self) -> usize {
        self.entries.first().map_or(0, Vec::len)
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// The first `m` samples.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        if m > self.len() {
            return Err(Error::Argument(format!("prefix of {m} from {} samples", self.len())));
        }
        Ok(Self {
            entries: self.entries[..m].to_vec(),
            nodes: self.nodes.get(..m).map_or_else(Vec::new, <[f64]>::to_vec),
        })
    }
}

/// Entrywise sample mean.
pub fn mc_estimate(samples: &QoISampleSet) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Argument("Monte Carlo estimate of an empty sample set".into()));
    }
    let m = samples.len() as f64;
    let mut acc = vec![0.0; samples.width()];
    for e in samples.entries() {
        for (a, v) in acc.iter_mut().zip(e) {
            *a += v;
        }
    }
    acc.iter_mut().for_each(|a| *a /= m);
    Ok(acc)
}

/// Entrywise unbiased sample variance (zero for a single sample).
fn sample_variance(samples: &QoISampleSet, mean: &[f64]) -> Vec<f64> {
    let m = samples.len();
    if m < 2 {
        return vec![0.0; mean.len()];
    }
    let mut acc = vec![0.0; mean.len()];
    for e in samples.entries() {
        for ((a, v), mu) in acc.iter_mut().zip(e).zip(mean) {
            *a += (v - mu) * (v - mu);
        }
    }
    acc.iter_mut().for_each(|a| *a /= (m - 1) as f64);
    acc
}

fn check_pair(primary: &QoISampleSet, control: &QoISampleSet, control_mean: &[f64]) -> Result<()> {
    if primary.len() != control.len() || primary.width() != control.width() || control_mean.len() != primary.width() {
        return Err(Error::Argument(format!(
            "shape mismatch: primary {}x{}, control {}x{}, control mean {}",
            primary.len(),
            primary.width(),
            control.len(),
            control.width(),
            control_mean.len()
        )));
    }
    if !primary.nodes().is_empty() && !control.nodes().is_empty() && primary.nodes() != control.nodes() {
        return Err(Error::InvariantViolation(
            "primary and control samples are not evaluated at the same nodes".into(),
        ));
    }
    Ok(())
}

/// `λ̂* = Cov_M / Var_M`, with control deviations about the exact mean and
/// primary deviations about the sample mean.
pub fn optimal_lambda_hat(primary: &QoISampleSet, control: &QoISampleSet, control_mean: &[f64]) -> Result<Vec<f64>> {
    check_pair(primary, control, control_mean)?;
    let m = primary.len();
    if m < 2 {
        return Err(Error::Argument(format!("λ̂* needs at least two samples, got {m}")));
    }
    let p_mean = mc_estimate(primary)?;
    let width = primary.width();
    let mut cov = vec![0.0; width];
    let mut var = vec![0.0; width];
    let mut sq = vec![0.0; width];
    for (p, c) in primary.entries().iter().zip(control.entries()) {
        for j in 0..width {
            let dc = c[j] - control_mean[j];
            cov[j] += (p[j] - p_mean[j]) * dc;
            var[j] += dc * dc;
            sq[j] += c[j] * c[j];
        }
    }
    let denom = (m - 1) as f64;
    Ok((0..width)
        .map(|j| {
            let v = var[j] / denom;
            let scale = sq[j] / m as f64;
            if !(v > LAMBDA_GUARD * scale.max(f64::MIN_POSITIVE)) {
                0.0
            } else {
                (cov[j] / denom) / v
            }
        })
        .collect())
}

/// Cost of one estimate in units of particle/cell updates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CostLedger {
    pub n: usize,
    pub m: usize,
    pub n_mf: usize,
    pub m_mf: usize,
    pub k: u32,
}

/// A control-variate (or plain MC) estimate with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEstimate {
    pub value: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Sample Pearson correlation of primary and control.
    pub rho: Vec<f64>,
    /// Estimated variance of the plain MC estimator, `s_q² / M`.
    pub var_mc: Vec<f64>,
    /// Estimated variance of the CV estimator with the λ used.
    pub var_cv: Vec<f64>,
    /// `1 - ρ̂²`, the variance factor at the optimal λ.
    pub variance_factor: Vec<f64>,
    pub control_mean: Option<Vec<f64>>,
    /// Sampling error of an estimated control mean (MFCV), absent when exact.
    pub control_mean_stderr: Option<Vec<f64>>,
    pub cost: CostLedger,
}

impl CvEstimate {
    /// Plain Monte Carlo as a CV estimate with `λ = 0` and no control.
    pub fn monte_carlo(primary: &QoISampleSet) -> Result<Self> {
        let value = mc_estimate(primary)?;
        let var = sample_variance(primary, &value);
        let var_mc: Vec<f64> = var.iter().map(|v| v / primary.len() as f64).collect();
        let w = value.len();
        Ok(Self {
            value,
            lambda: vec![0.0; w],
            rho: vec![0.0; w],
            var_cv: var_mc.clone(),
            var_mc,
            variance_factor: vec![1.0; w],
            control_mean: None,
            control_mean_stderr: None,
            cost: CostLedger {
                m: primary.len(),
                ..CostLedger::default()
            },
        })
    }
}

/// `E_M[q] - λ (E_M[q̃] - E[q̃])` entrywise.
pub fn cv_estimate(
    primary: &QoISampleSet,
    control: &QoISampleSet,
    control_mean: &[f64],
    lambda: &[f64],
) -> Result<CvEstimate> {
    check_pair(primary, control, control_mean)?;
    if lambda.len() != primary.width() {
        return Err(Error::Argument(format!(
            "{} λ values for QoI width {}",
            lambda.len(),
            primary.width()
        )));
    }
    let m = primary.len();
    let p_mean = mc_estimate(primary)?;
    let c_mean = mc_estimate(control)?;
    let width = primary.width();
    let value: Vec<f64> = (0..width)
        .map(|j| p_mean[j] - lambda[j] * (c_mean[j] - control_mean[j]))
        .collect();
    let (mut spp, mut scc, mut spc, mut sres) = (vec![0.0; width], vec![0.0; width], vec![0.0; width], vec![0.0; width]);
    for (p, c) in primary.entries().iter().zip(control.entries()) {
        for j in 0..width {
            let dp = p[j] - p_mean[j];
            let dc = c[j] - c_mean[j];
            spp[j] += dp * dp;
            scc[j] += dc * dc;
            spc[j] += dp * dc;
            let r = dp - lambda[j] * dc;
            sres[j] += r * r;
        }
    }
    let denom = if m > 1 { (m - 1) as f64 * m as f64 } else { f64::INFINITY };
    let rho: Vec<f64> = (0..width)
        .map(|j| {
            let d = (spp[j] * scc[j]).sqrt();
            if d > 0.0 {
                (spc[j] / d).clamp(-1.0, 1.0)
            } else {
                0.0
            }
        })
        .collect();
    Ok(CvEstimate {
        value,
        lambda: lambda.to_vec(),
        variance_factor: rho.iter().map(|r| 1.0 - r * r).collect(),
        rho,
        var_mc: spp.iter().map(|s| if m > 1 { s / denom } else { 0.0 }).collect(),
        var_cv: sres.iter().map(|s| if m > 1 { s / denom } else { 0.0 }).collect(),
        control_mean: Some(control_mean.to_vec()),
        control_mean_stderr: None,
        cost: CostLedger {
            m,
            ..CostLedger::default()
        },
    })
}

/// Gauss–Legendre rule for `z ~ U([lo, hi])` with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CollocationRule {
    pub fn new(count: usize, law: &UncertaintyLaw) -> Result<Self> {
        if count == 0 {
            return Err(Error::Argument("collocation rule needs at least one node".into()));
        }
        let gl = GaussLegendre::new(count);
        Ok(Self {
            nodes: gl.mapped_nodes(law.lower(), law.upper()).collect(),
            weights: gl.weights.iter().map(|w| 0.5 * w).collect(),
        })
    }
}

/// `Σ w_k g(z_k)` for a vector-valued integrand, evaluated in parallel.
pub fn collocation_mean<F>(integrand: F, rule: &CollocationRule) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    use rayon::prelude::*;
    let values: Vec<Vec<f64>> = rule.nodes.par_iter().map(|&z| integrand(z)).collect::<Result<_>>()?;
    let width = values.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; width];
    for (v, w) in values.iter().zip(&rule.weights) {
        if v.len() != width {
            return Err(Error::Argument("collocation integrand changed shape between nodes".into()));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("collocation integrand is not finite ({x})")));
        }
        for (a, x) in acc.iter_mut().zip(v) {
            *a += w * x;
        }
    }
    Ok(acc)
}

/// `⌊k N M / N_MF⌋`: control-mean samples affordable at the primary's cost.
pub fn budget_max_mmf(n: usize, m: usize, n_mf: usize, k: u32) -> Result<usize> {
    if n == 0 || m == 0 || n_mf == 0 || k == 0 {
        return Err(Error::Argument("budget arguments must all be positive".into()));
    }
    let bound = (k as u128 * n as u128 * m as u128) / n_mf as u128;
    Ok(usize::try_from(bound).unwrap_or(usize::MAX))
}

/// Which estimator a sweep point uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "MC")]
    Mc,
    #[serde(rename = "MFCV-S")]
    MfcvS,
    #[serde(rename = "MFCV")]
    Mfcv,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::Mc => "MC",
            EstimatorKind::MfcvS => "MFCV-S",
            EstimatorKind::Mfcv => "MFCV",
        }
    }
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "MC" | "mc" => Ok(EstimatorKind::Mc),
            "MFCV-S" | "mfcv-s" => Ok(EstimatorKind::MfcvS),
            "MFCV" | "mfcv" => Ok(EstimatorKind::Mfcv),
            other => Err(Error::Configuration(format!(
                "unknown estimator kind `{other}`; expected MC, MFCV-S or MFCV"
            ))),
        }
    }
}

/// How λ is chosen for a control-variate estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum LambdaPolicy {
    #[default]
    Optimal,
    Fixed(f64),
}

/// Ratio `Var[y] / Var[x]` of two replication series with a delta-method
/// standard error.
pub fn variance_ratio(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let r = x.len();
    if r != y.len() || r < 3 {
        return Err(Error::Argument("variance ratio needs two equal series of length >= 3".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / r as f64;
    let (mx, my) = (mean(x), mean(y));
    let a: Vec<f64> = y.iter().map(|v| (v - my).powi(2)).collect();
    let b: Vec<f64> = x.iter().map(|v| (v - mx).powi(2)).collect();
    let (ma, mb) = (mean(&a), mean(&b));
    if !(mb > 0.0) {
        return Err(Error::Numeric("reference series has zero variance".into()));
    }
    let ratio = ma / mb;
    let resid: Vec<f64> = a.iter().zip(&b).map(|(ai, bi)| ai - ratio * bi).collect();
    let mr = mean(&resid);
    let var_r = resid.iter().map(|v| (v - mr).powi(2)).sum::<f64>() / (r - 1) as f64;
    Ok((ratio, (var_r / r as f64).sqrt() / mb))
}
