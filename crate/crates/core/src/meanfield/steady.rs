use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::models::{DiffusionSpec, ModelSpec};
use crate::quadrature::integrate_adaptive;

/// Closed-form family of a mean-field steady state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SteadyFamily {
    /// Opinion rule with `D = 1 - w²`.
    MaxwellianLike,
    /// Opinion rule with `D = sqrt(1 - w²)`.
    Beta,
    /// Wealth rule with `D = w` on the half-line.
    InverseGamma,
}

/// Parameters of `f∞(·, z)`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SteadyStateParams {
    pub family: SteadyFamily,
    /// Conserved mean `m(z)`.
    pub mean: f64,
    /// Unscaled noise variance `σ²`.
    pub variance: f64,
    /// Interaction strength `p(z)` or `λ(z)`.
    pub strength: f64,
}

impl SteadyStateParams {
    /// Derives the steady-state parameters of a catalog-style model at `z`.
    pub fn for_model(model: &ModelSpec, z: f64) -> Result<Self> {
        model.check_uncertainty(z)?;
        let strength = model.coefficients.strength(z).ok_or_else(|| {
            Error::Configuration(format!(
                "model {} has no closed-form steady state (distance-dependent or general coefficients)",
                model.key
            ))
        })?;
        let family = match (&model.diffusion, model.domain.half_line) {
            (DiffusionSpec::SqrtParabola, false) => SteadyFamily::Beta,
            (DiffusionSpec::Parabola, false) => SteadyFamily::MaxwellianLike,
            (DiffusionSpec::Linear, true) => SteadyFamily::InverseGamma,
            (d, _) => {
                return Err(Error::Configuration(format!(
                    "no closed-form steady state for diffusion `{}` on this domain",
                    d.tag()
                )))
            }
        };
        let params = Self {
            family,
            mean: model.initial_mean(z)?,
            variance: model.noise.variance,
            strength,
        };
        params.validate()?;
        Ok(params)
    }

    /// Tail exponent `μ = 1 + 2λ/σ²` of the inverse-gamma family.
    pub fn mu(&self) -> f64 {
        1.0 + 2.0 * self.strength / self.variance
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.variance > 0.0) || !(self.strength > 0.0) {
            return Err(Error::Domain(format!(
                "steady state needs σ² > 0 and a positive strength, got σ² = {}, strength = {}",
                self.variance, self.strength
            )));
        }
        match self.family {
            SteadyFamily::Beta | SteadyFamily::MaxwellianLike if !(self.mean.abs() < 1.0) => Err(
                Error::Domain(format!("opinion steady state needs |m| < 1, got {}", self.mean)),
            ),
            SteadyFamily::InverseGamma if !(self.mu() > 1.0 && self.mean > 0.0) => {
                Err(Error::Domain(format!(
                    "inverse-gamma steady state needs μ > 1 and m > 0, got μ = {}, m = {}",
                    self.mu(),
                    self.mean
                )))
            }
            _ => Ok(()),
        }
    }
}

/// A normalized steady-state density, ready for repeated evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SteadyState {
    params: SteadyStateParams,
    /// Logarithm of the normalization constant.
    log_norm: f64,
}

impl SteadyState {
    pub fn new(params: SteadyStateParams) -> Result<Self> {
        params.validate()?;
        let log_norm = match params.family {
            SteadyFamily::Beta => {
                let (a, b) = beta_exponents(&params);
                (1.0 - a - b) * std::f64::consts::LN_2 - ln_beta(a, b)
            }
            SteadyFamily::InverseGamma => {
                let mu = params.mu();
                let c = (mu - 1.0) * params.mean;
                mu * c.ln() - ln_gamma(mu)
            }
            SteadyFamily::MaxwellianLike => {
                // shift by the peak of the log-profile before integrating
                let peak = (1..2000)
                    .map(|i| -1.0 + 2.0 * i as f64 / 2000.0)
                    .map(|w| maxwellian_log_profile(&params, w))
                    .fold(f64::NEG_INFINITY, f64::max);
                let mass = integrate_adaptive(
                    |w| (maxwellian_log_profile(&params, w) - peak).exp(),
                    -1.0,
                    1.0,
                    1e-12,
                    0.0,
                )?;
                if !(mass > 0.0 && mass.is_finite()) {
                    return Err(Error::Numeric(format!(
                        "Maxwellian-like steady state has non-normalizable mass {mass}"
                    )));
                }
                -peak - mass.ln()
            }
        };
        Ok(Self { params, log_norm })
    }

    pub fn params(&self) -> &SteadyStateParams {
        &self.params
    }

    /// `f∞(w)`; zero outside the support.
    pub fn density(&self, w: f64) -> f64 {
        let p = &self.params;
        match p.family {
            SteadyFamily::Beta => {
                if !(w > -1.0 && w < 1.0) {
                    return 0.0;
                }
                let (a, b) = beta_exponents(p);
                (self.log_norm + (a - 1.0) * (1.0 + w).ln() + (b - 1.0) * (1.0 - w).ln()).exp()
            }
            SteadyFamily::MaxwellianLike => {
                if !(w > -1.0 && w < 1.0) {
                    return 0.0;
                }
                (self.log_norm + maxwellian_log_profile(p, w)).exp()
            }
            SteadyFamily::InverseGamma => {
                if !(w > 0.0) {
                    return 0.0;
                }
                let mu = p.mu();
                let c = (mu - 1.0) * p.mean;
                (self.log_norm - (1.0 + mu) * w.ln() - c / w).exp()
            }
        }
    }
}

fn beta_exponents(p: &SteadyStateParams) -> (f64, f64) {
    let s = p.strength / p.variance;
    (s * (1.0 + p.mean), s * (1.0 - p.mean))
}

fn maxwellian_log_profile(p: &SteadyStateParams, w: f64) -> f64 {
    let k = p.strength * p.mean / (2.0 * p.variance);
    let one_m = 1.0 - w * w;
    (-2.0 + k) * (1.0 + w).ln() + (-2.0 - k) * (1.0 - w).ln()
        - p.strength * (1.0 - p.mean * w) / (p.variance * one_m)
}

/// One-shot evaluation of `f∞(w)`; build a [`SteadyState`] to evaluate many points.
pub fn steady_state_density(params: &SteadyStateParams, w: f64) -> Result<f64> {
    let support_ok = match params.family {
        SteadyFamily::InverseGamma => w >= 0.0,
        _ => (-1.0..=1.0).contains(&w),
    };
    if !support_ok {
        return Err(Error::Domain(format!("w = {w} outside the steady-state support")));
    }
    Ok(SteadyState::new(*params)?.density(w))
}
