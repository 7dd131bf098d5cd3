//! Uncertain binary-interaction kinetic models.
//!
//! A [`ModelSpec`] bundles the microscopic interaction rule
//!
//! ```text
//! v' = v + ε [(p1(z) - 1) v + q1(z) w] + D(v, z) η_v
//! w' = w + ε [p2(z) v + (q2(z) - 1) w] + D(w, z) η_w
//! ```
//!
//! with the noise law, the state domain, the uncertainty law of `z` and the
//! initial density. The catalog in [`catalog`] provides the opinion, wealth and
//! bounded-confidence instances used by the experiment harness.

mod catalog;
mod initial;
mod interaction;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{catalog_keys, describe, CatalogEntry};
pub use initial::InitialCondition;
pub use interaction::{admissible_noise_bound, apply_interaction, drift_kernel, sample_noise};
pub(crate) use interaction::drift_kernel_unchecked;

/// Tolerance for the numerical mean-conservation check on sampled `z`.
pub const MEAN_CONSERVATION_TOL: f64 = 1e-12;

/// `constant + slope * z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub constant: f64,
    pub slope: f64,
}

impl Affine {
    pub const fn new(constant: f64, slope: f64) -> Self {
        Self { constant, slope }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0)
    }

    #[inline]
    pub fn at(&self, z: f64) -> f64 {
        self.constant + self.slope * z
    }

    /// Largest value over `[lo, hi]`.
    pub fn max_over(&self, lo: f64, hi: f64) -> f64 {
        self.at(lo).max(self.at(hi))
    }

    pub fn min_over(&self, lo: f64, hi: f64) -> f64 {
        self.at(lo).min(self.at(hi))
    }
}

/// Law of the scalar uncertain parameter: `z ~ U([lower, upper])`.
///
/// Every catalog scenario has a one-dimensional uniform uncertainty, so the
/// law is fixed to that case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyLaw {
    lower: f64,
    upper: f64,
}

impl UncertaintyLaw {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::Configuration(format!(
                "uncertainty support [{lower}, {upper}] must be a finite interval with lower < upper"
            )));
        }
        Ok(Self { lower, upper })
    }

    pub fn dimension(&self) -> usize {
        1
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn contains(&self, z: f64) -> bool {
        z >= self.lower && z <= self.upper
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.lower + (self.upper - self.lower) * u
    }

    pub fn mean(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Compromise propensity of the symmetric opinion rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Compromise {
    /// `p(z)` independent of the opinion distance.
    Uniform(Affine),
    /// `p(|v - w|, z) = χ(|v - w| < z)`; ties count as no interaction.
    BoundedConfidence,
}

impl Compromise {
    #[inline]
    pub fn at(&self, z: f64, distance: f64) -> f64 {
        match self {
            Compromise::Uniform(p) => p.at(z),
            Compromise::BoundedConfidence => {
                if distance < z {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// The interaction functions `p1, p2, q1, q2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InteractionCoefficients {
    /// Symmetric opinion rule: `p1 = q2 = 1 - p`, `p2 = q1 = p`.
    Opinion(Compromise),
    /// Wealth exchange: `p1 = q2 = 1 - λ(z)`, `p2 = q1 = λ(z)`.
    Wealth { propensity: Affine },
    General {
        p1: Affine,
        p2: Affine,
        q1: Affine,
        q2: Affine,
    },
}

impl InteractionCoefficients {
    /// `[p1, p2, q1, q2]` at `z` for a pair at distance `|v - w|`.
    #[inline]
    pub fn at(&self, z: f64, distance: f64) -> [f64; 4] {
        match self {
            InteractionCoefficients::Opinion(c) => {
                let p = c.at(z, distance);
                [1.0 - p, p, p, 1.0 - p]
            }
            InteractionCoefficients::Wealth { propensity } => {
                let l = propensity.at(z);
                [1.0 - l, l, l, 1.0 - l]
            }
            InteractionCoefficients::General { p1, p2, q1, q2 } => {
                [p1.at(z), p2.at(z), q1.at(z), q2.at(z)]
            }
        }
    }

    pub fn depends_on_distance(&self) -> bool {
        matches!(
            self,
            InteractionCoefficients::Opinion(Compromise::BoundedConfidence)
        )
    }

    /// Checks `p1 + p2 = 1` and `q1 + q2 = 1` on each sampled `z`.
    pub fn is_mean_conserving(&self, samples: &[f64]) -> bool {
        samples.iter().all(|&z| {
            [0.0, 0.5, 1.0, 2.0].iter().all(|&d| {
                let [p1, p2, q1, q2] = self.at(z, d);
                (p1 + p2 - 1.0).abs() <= MEAN_CONSERVATION_TOL
                    && (q1 + q2 - 1.0).abs() <= MEAN_CONSERVATION_TOL
            })
        })
    }

    /// Interaction strength `c(z)` such that the mean-field drift is `c(z) (m - w)`
    /// for mean-conserving, distance-independent rules.
    pub fn strength(&self, z: f64) -> Option<f64> {
        match self {
            InteractionCoefficients::Opinion(Compromise::Uniform(p)) => Some(p.at(z)),
            InteractionCoefficients::Wealth { propensity } => Some(propensity.at(z)),
            _ => None,
        }
    }
}

/// Closed-form tag of the local diffusion relevance `D(w, z)`.
#[derive(Clone)]
pub enum DiffusionSpec {
    /// `sqrt(1 - w^2)`
    SqrtParabola,
    /// `1 - w^2`
    Parabola,
    /// `w`
    Linear,
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl DiffusionSpec {
    #[inline]
    pub fn value(&self, w: f64, z: f64) -> f64 {
        match self {
            DiffusionSpec::SqrtParabola => (1.0 - w * w).max(0.0).sqrt(),
            DiffusionSpec::Parabola => 1.0 - w * w,
            DiffusionSpec::Linear => w,
            DiffusionSpec::Custom(f) => f(w, z),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            DiffusionSpec::SqrtParabola => "sqrt-parabola",
            DiffusionSpec::Parabola => "parabola",
            DiffusionSpec::Linear => "linear",
            DiffusionSpec::Custom(_) => "custom",
        }
    }
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Noise `η_ε` with variance `ε σ²`, realized uniform on a symmetric interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Unscaled variance `σ²`.
    pub variance: f64,
}

impl NoiseSpec {
    pub fn scaled_variance(&self, eps: f64) -> f64 {
        eps * self.variance
    }

    /// Half-width of the uniform law with variance `ε σ²`.
    pub fn half_width(&self, eps: f64) -> f64 {
        (3.0 * self.scaled_variance(eps)).sqrt()
    }

    /// Variance lost when the support is truncated to `bound`.
    pub fn variance_deficit(&self, bound: f64, eps: f64) -> f64 {
        let b = self.half_width(eps).min(bound);
        (self.scaled_variance(eps) - b * b / 3.0).max(0.0)
    }
}

/// State space `V`. A half-line `[lower, ∞)` keeps `upper` as a truncation
/// bound for grids only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lower: f64,
    pub upper: f64,
    pub half_line: bool,
}

impl Domain {
    pub const fn interval(lower: f64, upper: f64) -> Self {
        Self {
            lower,
            upper,
            half_line: false,
        }
    }

    pub const fn half_line(lower: f64, truncation: f64) -> Self {
        Self {
            lower,
            upper: truncation,
            half_line: true,
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && (self.half_line || x <= self.upper)
    }

    /// Effective upper bound used for admissibility (infinite on a half-line).
    pub fn sup(&self) -> f64 {
        if self.half_line {
            f64::INFINITY
        } else {
            self.upper
        }
    }
}

/// A complete uncertain binary-interaction model.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub key: String,
    pub domain: Domain,
    pub coefficients: InteractionCoefficients,
    pub diffusion: DiffusionSpec,
    pub noise: NoiseSpec,
    pub uncertainty: UncertaintyLaw,
    pub initial: InitialCondition,
}

impl ModelSpec {
    /// Looks up a catalog model by key (`opinion-A`, `wealth-B`, ...).
    pub fn catalog(key: &str) -> Result<Self> {
        catalog::build(key)
    }

    pub fn with_noise_variance(mut self, variance: f64) -> Self {
        self.noise.variance = variance;
        self
    }

    pub fn check_state(&self, x: f64) -> Result<()> {
        if self.domain.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "state {x} outside V = [{}, {}] of model {}",
                self.domain.lower,
                self.domain.sup(),
                self.key
            )))
        }
    }

    pub fn check_uncertainty(&self, z: f64) -> Result<()> {
        if self.uncertainty.contains(z) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "z = {z} outside support [{}, {}]",
                self.uncertainty.lower(),
                self.uncertainty.upper()
            )))
        }
    }

    /// Mean-conservation flag, checked on a deterministic sweep of the support.
    pub fn is_mean_conserving(&self) -> bool {
        let law = &self.uncertainty;
        let samples: Vec<f64> = (0..=16)
            .map(|i| law.lower() + (law.upper() - law.lower()) * i as f64 / 16.0)
            .collect();
        self.coefficients.is_mean_conserving(&samples)
    }

    /// Initial density `f0(w, z)`.
    pub fn initial_density(&self, w: f64, z: f64) -> f64 {
        self.initial.density(w, z, &self.domain)
    }

    /// Mean of `f0(·, z)`.
    pub fn initial_mean(&self, z: f64) -> Result<f64> {
        self.initial.mean(z, &self.domain)
    }

    /// Validates parameter ranges and unit mass of the initial density.
    pub fn validate(&self) -> Result<()> {
        if !(self.noise.variance >= 0.0) || !self.noise.variance.is_finite() {
            return Err(Error::Configuration(format!(
                "noise variance must be finite and nonnegative, got {}",
                self.noise.variance
            )));
        }
        if !(self.domain.lower < self.domain.upper) {
            return Err(Error::Configuration("domain must satisfy lower < upper".into()));
        }
        let law = self.uncertainty;
        let probes: Vec<f64> = (0..=8)
            .map(|i| law.lower() + (law.upper() - law.lower()) * i as f64 / 8.0)
            .collect();
        if let InteractionCoefficients::Opinion(Compromise::Uniform(p)) = self.coefficients {
            if p.min_over(law.lower(), law.upper()) < 0.0
                || p.max_over(law.lower(), law.upper()) > 1.0
            {
                return Err(Error::Configuration(
                    "opinion compromise p(z) must lie in [0, 1] on the support".into(),
                ));
            }
        }
        for &z in &probes {
            for k in 0..=16 {
                let w = self.domain.lower + (self.domain.upper - self.domain.lower) * k as f64 / 16.0;
                let d = self.diffusion.value(w, z);
                if !(d >= 0.0) {
                    return Err(Error::Configuration(format!(
                        "diffusion D({w}, {z}) = {d} is negative"
                    )));
                }
            }
            let mass = self.initial.mass(z, &self.domain)?;
            if (mass - 1.0).abs() > 1e-8 {
                return Err(Error::Configuration(format!(
                    "initial density at z = {z} has mass {mass}, expected 1"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_models_validate() {
        for key in catalog_keys() {
            let m = ModelSpec::catalog(key).unwrap();
            m.validate().unwrap();
            assert!(m.is_mean_conserving(), "{key}");
            assert_eq!(m.uncertainty.dimension(), 1);
        }
    }

    #[test]
    fn unknown_catalog_key_is_configuration_error() {
        let err = ModelSpec::catalog("opinion-Z").unwrap_err();
        assert!(err.is_configuration());
    }

    #[test]
    fn uncertainty_samples_stay_in_support() {
        use rand::SeedableRng;
        let law = UncertaintyLaw::uniform(1.0, 2.0).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10_000 {
            assert!(law.contains(law.sample(&mut rng)));
        }
        assert!(UncertaintyLaw::uniform(1.0, 1.0).is_err());
    }

    #[test]
    fn non_conserving_coefficients_are_flagged() {
        let c = InteractionCoefficients::General {
            p1: Affine::constant(0.5),
            p2: Affine::constant(0.5),
            q1: Affine::new(0.5, 0.1),
            q2: Affine::constant(0.5),
        };
        assert!(c.is_mean_conserving(&[0.0]));
        assert!(!c.is_mean_conserving(&[0.0, 0.3]));
    }

    #[test]
    fn noise_deficit_is_reported() {
        let noise = NoiseSpec { variance: 1.0 };
        assert_eq!(noise.variance_deficit(f64::INFINITY, 0.1), 0.0);
        let b = 0.1;
        let deficit = noise.variance_deficit(b, 0.1);
        assert!((deficit - (0.1 - b * b / 3.0)).abs() < 1e-15);
    }
}
