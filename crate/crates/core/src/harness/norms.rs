use super::scenario::NormOrdering;
use crate::error::{Error, Result};

fn check(estimates: &[Vec<f64>], reference: &[f64]) -> Result<()> {
    if estimates.is_empty() {
        return Err(Error::Argument("error norm needs at least one replication".into()));
    }
    if let Some(e) = estimates.iter().find(|e| e.len() != reference.len()) {
        return Err(Error::Argument(format!(
            "estimate has {} entries, reference has {}",
            e.len(),
            reference.len()
        )));
    }
    Ok(())
}

fn lp(values: impl Iterator<Item = f64>, weight: f64, p: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0, f64::max);
    }
    (values.map(|v| v.powf(p)).sum::<f64>() * weight).powf(1.0 / p)
}

/// Discrete L^p-in-state error of replicated estimates against a reference
/// field; `weight` is the quadrature weight of one entry (Δw for densities,
/// 1 for scalars).
pub fn field_error_norm(
    estimates: &[Vec<f64>],
    reference: &[f64],
    weight: f64,
    p: f64,
    ordering: NormOrdering,
) -> Result<f64> {
    check(estimates, reference)?;
    let r = estimates.len() as f64;
    Ok(match ordering {
        NormOrdering::Rms => {
            let rms = (0..reference.len()).map(|j| {
                (estimates.iter().map(|e| (e[j] - reference[j]).powi(2)).sum::<f64>() / r).sqrt()
            });
            lp(rms, weight, p)
        }
        NormOrdering::Expectation => {
            let sq: f64 = estimates
                .iter()
                .map(|e| lp(e.iter().zip(reference).map(|(a, b)| (a - b).abs()), weight, p).powi(2))
                .sum();
            (sq / r).sqrt()
        }
    })
}

/// Error norm and a replication standard error for it, from the delta method
/// on the per-replication squared norms.
pub fn error_with_stderr(
    estimates: &[Vec<f64>],
    reference: &[f64],
    weight: f64,
    p: f64,
    ordering: NormOrdering,
) -> Result<(f64, f64)> {
    let err = field_error_norm(estimates, reference, weight, p, ordering)?;
    let r = estimates.len();
    if r < 2 || err == 0.0 {
        return Ok((err, 0.0));
    }
    let sq: Vec<f64> = estimates
        .iter()
        .map(|e| lp(e.iter().zip(reference).map(|(a, b)| (a - b).abs()), weight, p).powi(2))
        .collect();
    let mean = sq.iter().sum::<f64>() / r as f64;
    let var = sq.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (r - 1) as f64;
    Ok((err, (var / r as f64).sqrt() / (2.0 * err)))
}
