use std::fmt;
use std::sync::Arc;

use rand::Rng;
use statrs::function::erf::erf;

use super::{Affine, Domain};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_adaptive, GaussLegendre};

/// Nodes of the inverse-CDF table used to sample non-uniform initial data.
pub const INVERSE_CDF_NODES: usize = 1 << 12;

/// Initial density `f0(w, z)`.
#[derive(Clone)]
pub enum InitialCondition {
    /// Uniform on `[lower(z), upper(z)]`.
    Uniform { lower: Affine, upper: Affine },
    /// `C [exp(-s (w - c1)^2) + exp(-s (w - c2)^2)]` restricted to `V`.
    DoubleGaussian { centers: [f64; 2], sharpness: f64 },
    /// Arbitrary nonnegative profile, normalized numerically on `V`.
    Custom(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for InitialCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialCondition::Uniform { lower, upper } => f
                .debug_struct("Uniform")
                .field("lower", lower)
                .field("upper", upper)
                .finish(),
            InitialCondition::DoubleGaussian { centers, sharpness } => f
                .debug_struct("DoubleGaussian")
                .field("centers", centers)
                .field("sharpness", sharpness)
                .finish(),
            InitialCondition::Custom(_) => f.write_str("Custom"),
        }
    }
}

fn gaussian_mass(sharpness: f64, center: f64, a: f64, b: f64) -> f64 {
    let r = sharpness.sqrt();
    0.5 * (std::f64::consts::PI / sharpness).sqrt() * (erf(r * (b - center)) - erf(r * (a - center)))
}

impl InitialCondition {
    fn bounds(&self, z: f64) -> Option<(f64, f64)> {
        match self {
            InitialCondition::Uniform { lower, upper } => Some((lower.at(z), upper.at(z))),
            _ => None,
        }
    }

    fn raw(&self, w: f64, z: f64) -> f64 {
        match self {
            InitialCondition::Uniform { .. } => {
                let (lo, hi) = self.bounds(z).expect("uniform bounds");
                if w >= lo && w <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            InitialCondition::DoubleGaussian { centers, sharpness } => centers
                .iter()
                .map(|c| (-sharpness * (w - c) * (w - c)).exp())
                .sum(),
            InitialCondition::Custom(f) => f(w, z),
        }
    }

    fn normalization(&self, z: f64, domain: &Domain) -> Result<f64> {
        match self {
            InitialCondition::Uniform { .. } => Ok(1.0),
            InitialCondition::DoubleGaussian { centers, sharpness } => Ok(centers
                .iter()
                .map(|&c| gaussian_mass(*sharpness, c, domain.lower, domain.upper))
                .sum()),
            InitialCondition::Custom(f) => {
                let mass = integrate_adaptive(|w| f(w, z), domain.lower, domain.upper, 1e-12, 1e-300)?;
                if !(mass > 0.0) {
                    return Err(Error::Configuration(format!(
                        "custom initial density has nonpositive mass {mass} at z = {z}"
                    )));
                }
                Ok(mass)
            }
        }
    }

    /// Normalized density at `w`.
    pub fn density(&self, w: f64, z: f64, domain: &Domain) -> f64 {
        if !domain.contains(w) {
            return 0.0;
        }
        match self.normalization(z, domain) {
            Ok(c) => self.raw(w, z) / c,
            Err(_) => f64::NAN,
        }
    }

    /// Total mass over `V`, computed by quadrature independently of the
    /// closed-form normalization.
    pub fn mass(&self, z: f64, domain: &Domain) -> Result<f64> {
        if let Some((lo, hi)) = self.bounds(z) {
            if !(lo < hi) || !domain.contains(lo) || !domain.contains(hi) {
                return Err(Error::Configuration(format!(
                    "uniform initial support [{lo}, {hi}] must be a nonempty subinterval of V"
                )));
            }
            return integrate_adaptive(|w| self.raw(w, z), lo, hi, 1e-13, 0.0);
        }
        let c = self.normalization(z, domain)?;
        integrate_adaptive(|w| self.raw(w, z) / c, domain.lower, domain.upper, 1e-12, 1e-300)
    }

    /// Mean of the initial density.
    pub fn mean(&self, z: f64, domain: &Domain) -> Result<f64> {
        if let Some((lo, hi)) = self.bounds(z) {
            return Ok(0.5 * (lo + hi));
        }
        let c = self.normalization(z, domain)?;
        integrate_adaptive(
            |w| w * self.raw(w, z) / c,
            domain.lower,
            domain.upper,
            1e-12,
            1e-300,
        )
    }

    /// Averages of the density over the cells delimited by `edges`.
    pub fn cell_averages(&self, z: f64, domain: &Domain, edges: &[f64]) -> Result<Vec<f64>> {
        if let Some((lo, hi)) = self.bounds(z) {
            let height = 1.0 / (hi - lo);
            return Ok(edges
                .windows(2)
                .map(|e| {
                    let overlap = (e[1].min(hi) - e[0].max(lo)).max(0.0);
                    height * overlap / (e[1] - e[0])
                })
                .collect());
        }
        let c = self.normalization(z, domain)?;
        let rule = GaussLegendre::new(8);
        Ok(edges
            .windows(2)
            .map(|e| rule.integrate(e[0], e[1], |w| self.raw(w, z)) / (c * (e[1] - e[0])))
            .collect())
    }

    /// Draws `n` i.i.d. states from `f0(·, z)`.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        z: f64,
        domain: &Domain,
        n: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if let Some((lo, hi)) = self.bounds(z) {
            if !(lo < hi) || !domain.contains(lo) || !domain.contains(hi) {
                return Err(Error::Configuration(format!(
                    "uniform initial support [{lo}, {hi}] must be a nonempty subinterval of V"
                )));
            }
            return Ok((0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    lo + (hi - lo) * u
                })
                .collect());
        }
        let table = InverseCdf::tabulate(|w| self.raw(w, z), domain.lower, domain.upper)?;
        Ok((0..n).map(|_| table.sample(rng.random())).collect())
    }
}

/// Piecewise-linear inverse CDF of a density tabulated on a fine uniform grid.
struct InverseCdf {
    lower: f64,
    width: f64,
    cdf: Vec<f64>,
}

impl InverseCdf {
    fn tabulate<F: Fn(f64) -> f64>(f: F, lower: f64, upper: f64) -> Result<Self> {
        let width = (upper - lower) / INVERSE_CDF_NODES as f64;
        let mut cdf = Vec::with_capacity(INVERSE_CDF_NODES + 1);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 0..INVERSE_CDF_NODES {
            let v = f(lower + (i as f64 + 0.5) * width);
            if !(v >= 0.0) {
                return Err(Error::Configuration(format!(
                    "initial density is negative or non-finite ({v})"
                )));
            }
            acc += v * width;
            cdf.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::Configuration("initial density has zero mass".into()));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { lower, width, cdf })
    }

    fn sample(&self, u: f64) -> f64 {
        let j = self.cdf.partition_point(|&c| c <= u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[j - 1], self.cdf[j]);
        let frac = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.lower + ((j - 1) as f64 + frac) * self.width
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn opinion_domain() -> Domain {
        Domain::interval(-1.0, 1.0)
    }

    #[test]
    fn double_gaussian_normalizes() {
        let ic = InitialCondition::DoubleGaussian {
            centers: [-0.5, 0.5],
            sharpness: 30.0,
        };
        let d = opinion_domain();
        assert!((ic.mass(0.0, &d).unwrap() - 1.0).abs() < 1e-10);
        assert!(ic.mean(0.0, &d).unwrap().abs() < 1e-12);
    }

    #[test]
    fn custom_density_is_normalized_and_sampled() {
        let ic = InitialCondition::Custom(Arc::new(|w: f64, _z| 1.0 + w));
        let d = opinion_domain();
        assert!((ic.mass(0.0, &d).unwrap() - 1.0).abs() < 1e-10);
        let mean = ic.mean(0.0, &d).unwrap();
        assert!((mean - 1.0 / 3.0).abs() < 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let xs = ic.sample(0.0, &d, n, &mut rng).unwrap();
        assert!(xs.iter().all(|x| d.contains(*x)));
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (1.0f64 / 3.0 + 0.0 - mean * mean).sqrt();
        assert!((m - mean).abs() < 4.0 * sd / (n as f64).sqrt(), "{m}");
    }

    #[test]
    fn uniform_cell_averages_are_exact_overlaps() {
        let ic = InitialCondition::Uniform {
            lower: Affine::constant(-0.5),
            upper: Affine::constant(0.5),
        };
        let edges = [-1.0, -0.6, -0.4, 0.0, 1.0];
        let avg = ic.cell_averages(0.0, &opinion_domain(), &edges).unwrap();
        assert_eq!(avg[0], 0.0);
        assert!((avg[1] - 0.5).abs() < 1e-15);
        assert!((avg[2] - 1.0).abs() < 1e-15);
        assert!((avg[3] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_outside_domain_is_rejected() {
        let ic = InitialCondition::Uniform {
            lower: Affine::constant(0.5),
            upper: Affine::constant(1.5),
        };
        assert!(ic.mass(0.0, &opinion_domain()).is_err());
    }
}
