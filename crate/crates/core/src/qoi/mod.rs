//! Quantities of interest of a kinetic solution and histogram reconstruction.
//!
//! Every QoI can be evaluated on a particle ensemble (the DSMC primary) or on a
//! density sampled on the reconstruction grid (the mean-field control), so the
//! two sides of a control variate share one definition.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meanfield::{Grid1D, GridDensity, SteadyState};
use crate::quadrature::GaussLegendre;

/// Default number of reconstruction cells.
pub const DEFAULT_RECONSTRUCTION_CELLS: usize = 100;

/// Points `F_j = j / (n - 1)` at which Lorenz curves are tabulated as fields.
pub const LORENZ_POINTS: usize = 101;

/// Fraction of the largest states used by the Hill estimator.
pub const HILL_FRACTION: f64 = 0.05;

/// First-order histogram of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    /// Particles outside `[a, b]`, counted but not binned.
    pub out_of_window: usize,
}

impl Histogram {
    pub fn mass(&self) -> f64 {
        self.grid.dw() * self.values.iter().sum::<f64>()
    }
}

/// Each particle adds `1 / (N Δw)` to the cell containing it.
pub fn reconstruct(states: &[f64], grid: Grid1D) -> Histogram {
    let mut values = vec![0.0; grid.cells()];
    let mut out = 0;
    let weight = 1.0 / (states.len().max(1) as f64 * grid.dw());
    for &w in states {
        match grid.locate(w) {
            Some(i) => values[i] += weight,
            None => out += 1,
        }
    }
    Histogram {
        grid,
        values,
        out_of_window: out,
    }
}

/// `(1/N) Σ w_i^order`.
pub fn moment(states: &[f64], order: u32) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::Argument("moment of an empty ensemble".into()));
    }
    let p = order as i32;
    Ok(states.iter().map(|w| w.powi(p)).sum::<f64>() / states.len() as f64)
}

/// Fraction of particles strictly above `w`.
pub fn tail_distribution(states: &[f64], w: f64) -> f64 {
    if states.is_empty() {
        return 0.0;
    }
    states.iter().filter(|&&x| x > w).count() as f64 / states.len() as f64
}

/// Points of an empirical Lorenz curve, starting at `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LorenzCurveData {
    pub population: Vec<f64>,
    pub share: Vec<f64>,
}

impl LorenzCurveData {
    /// Piecewise-linear value at population fraction `f`.
    pub fn at(&self, f: f64) -> f64 {
        let f = f.clamp(0.0, 1.0);
        let j = self.population.partition_point(|&p| p < f);
        if j == 0 {
            return self.share[0];
        }
        let (p0, p1) = (self.population[j - 1], self.population[j]);
        let (l0, l1) = (self.share[j - 1], self.share[j]);
        if p1 == p0 {
            l1
        } else {
            l0 + (l1 - l0) * (f - p0) / (p1 - p0)
        }
    }

    /// The curve tabulated at `LORENZ_POINTS` equispaced fractions.
    pub fn tabulate(&self) -> Vec<f64> {
        (0..LORENZ_POINTS)
            .map(|j| self.at(j as f64 / (LORENZ_POINTS - 1) as f64))
            .collect()
    }
}

/// Sorted particle Lorenz curve: `F_j = j/N`, `L_j` the share of the poorest `j`.
pub fn lorenz_curve(states: &[f64]) -> Result<LorenzCurveData> {
    if let Some(x) = states.iter().find(|x| !(**x >= 0.0)) {
        return Err(Error::Argument(format!("Lorenz curve needs nonnegative states, found {x}")));
    }
    let mut sorted = states.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total: f64 = sorted.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Argument("Lorenz curve needs positive total wealth".into()));
    }
    let n = sorted.len() as f64;
    let mut population = Vec::with_capacity(sorted.len() + 1);
    let mut share = Vec::with_capacity(sorted.len() + 1);
    population.push(0.0);
    share.push(0.0);
    let mut acc = 0.0;
    for (j, w) in sorted.iter().enumerate() {
        acc += w;
        population.push((j + 1) as f64 / n);
        share.push(acc / total);
    }
    // the prefix sum may fall a few ulps short of the total
    *share.last_mut().expect("nonempty") = 1.0;
    Ok(LorenzCurveData { population, share })
}

/// `1 - 2 ∫ L`, trapezoidal on the curve's points.
pub fn gini(curve: &LorenzCurveData) -> f64 {
    let area: f64 = curve
        .population
        .windows(2)
        .zip(curve.share.windows(2))
        .map(|(p, l)| 0.5 * (p[1] - p[0]) * (l[0] + l[1]))
        .sum();
    1.0 - 2.0 * area
}

/// Hill estimate of the Pareto tail exponent from the largest `HILL_FRACTION` of states.
pub fn hill_estimator(states: &[f64]) -> Result<f64> {
    let n = states.len();
    let k = ((HILL_FRACTION * n as f64) as usize).max(1);
    if n <= k {
        return Err(Error::Argument(format!("Hill estimator needs more than {k} states")));
    }
    let mut sorted = states.to_vec();
    sorted.sort_by(f64::total_cmp);
    let u = sorted[n - k - 1];
    if !(u > 0.0) {
        return Err(Error::Numeric(format!("Hill threshold {u} is not positive")));
    }
    let s: f64 = sorted[n - k..].iter().map(|x| (x / u).ln()).sum();
    if !(s > 0.0) {
        return Err(Error::Numeric("Hill estimator: degenerate upper tail".into()));
    }
    Ok(k as f64 / s)
}

/// A density given by its cell values on a grid.
#[derive(Debug, Clone, Copy)]
pub struct CellField<'a> {
    pub grid: Grid1D,
    pub values: &'a [f64],
}

impl<'a> CellField<'a> {
    pub fn new(grid: Grid1D, values: &'a [f64]) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::Argument(format!(
                "{} values for a grid with {} cells",
                values.len(),
                grid.cells()
            )));
        }
        Ok(Self { grid, values })
    }

    fn cell_masses(&self) -> impl Iterator<Item = f64> + '_ {
        let dw = self.grid.dw();
        self.values.iter().map(move |v| v * dw)
    }

    pub fn mass(&self) -> f64 {
        self.cell_masses().sum()
    }

    /// Midpoint moment `Σ w_i^order f_i Δw / mass`.
    pub fn moment(&self, order: u32) -> f64 {
        let p = order as i32;
        let m: f64 = self
            .cell_masses()
            .enumerate()
            .map(|(i, c)| self.grid.center(i).powi(p) * c)
            .sum();
        m / self.mass()
    }

    /// Mass above `w`, with the cell containing `w` split linearly.
    pub fn tail(&self, w: f64) -> f64 {
        let g = &self.grid;
        let dw = g.dw();
        let mut acc = 0.0;
        for (i, c) in self.cell_masses().enumerate() {
            let left = g.lower() + i as f64 * dw;
            let share = ((left + dw - w) / dw).clamp(0.0, 1.0);
            acc += share * c;
        }
        acc / self.mass()
    }

    /// Lorenz curve of the piecewise-constant density: one point per cell edge.
    pub fn lorenz(&self) -> Result<LorenzCurveData> {
        if self.grid.lower() < 0.0 {
            return Err(Error::Argument("Lorenz curve needs a nonnegative state grid".into()));
        }
        let dw = self.grid.dw();
        let total_mass = self.mass();
        // ∫ w f over a cell is exact for piecewise-constant f
        let wealth: Vec<f64> = self
            .values
            .iter()
            .enumerate()
            .map(|(i, v)| v * dw * self.grid.center(i))
            .collect();
        let total_wealth: f64 = wealth.iter().sum();
        if !(total_mass > 0.0 && total_wealth > 0.0) {
            return Err(Error::Argument("Lorenz curve needs positive mass and wealth".into()));
        }
        let mut population = vec![0.0];
        let mut share = vec![0.0];
        let (mut p, mut l) = (0.0, 0.0);
        for (c, wl) in self.cell_masses().zip(&wealth) {
            if c == 0.0 {
                continue;
            }
            p += c;
            l += wl;
            population.push(p / total_mass);
            share.push(l / total_wealth);
        }
        *population.last_mut().expect("nonempty") = 1.0;
        *share.last_mut().expect("nonempty") = 1.0;
        Ok(LorenzCurveData { population, share })
    }

    /// Population version of the Hill functional: `P(X > u) / E[ln(X/u); X > u]`
    /// with `u` the `1 - HILL_FRACTION` quantile.
    pub fn hill(&self) -> Result<f64> {
        let g = &self.grid;
        let dw = g.dw();
        let mass = self.mass();
        let target = (1.0 - HILL_FRACTION) * mass;
        let mut acc = 0.0;
        let mut u = g.upper();
        let mut first = g.cells();
        for (i, c) in self.cell_masses().enumerate() {
            if acc + c >= target && c > 0.0 {
                let left = g.lower() + i as f64 * dw;
                u = left + dw * (target - acc) / c;
                first = i;
                break;
            }
            acc += c;
        }
        if !(u > 0.0) || first == g.cells() {
            return Err(Error::Numeric("Hill functional: no positive upper quantile".into()));
        }
        let mut log_excess = 0.0;
        let mut tail_mass = 0.0;
        for (i, c) in self.cell_masses().enumerate().skip(first) {
            let left = g.lower() + i as f64 * dw;
            let lo = left.max(u);
            let hi = left + dw;
            if hi <= lo {
                continue;
            }
            let part = c * (hi - lo) / dw;
            tail_mass += part;
            log_excess += part * (0.5 * (lo + hi) / u).ln();
        }
        if !(log_excess > 0.0) {
            return Err(Error::Numeric("Hill functional: degenerate upper tail".into()));
        }
        Ok(tail_mass / log_excess)
    }
}

/// A quantity of interest. Field QoIs evaluate to vectors, scalar ones to a
/// single entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Qoi {
    /// The density itself on the reconstruction grid.
    Density,
    Moment(u32),
    /// Mass strictly above a threshold.
    Tail(f64),
    /// Lorenz curve tabulated at `LORENZ_POINTS` fractions.
    Lorenz,
    Gini,
    /// Hill estimate of the tail exponent (particles) or its population value (profiles).
    TailIndex,
}

impl Qoi {
    pub fn is_field(&self) -> bool {
        matches!(self, Qoi::Density | Qoi::Lorenz)
    }

    /// Number of entries of one evaluation.
    pub fn len(&self, reconstruction: &Grid1D) -> usize {
        match self {
            Qoi::Density => reconstruction.cells(),
            Qoi::Lorenz => LORENZ_POINTS,
            _ => 1,
        }
    }

    pub fn needs_nonnegative_states(&self) -> bool {
        matches!(self, Qoi::Lorenz | Qoi::Gini | Qoi::TailIndex)
    }

    /// Evaluates on particle states.
    pub fn eval_particles(&self, states: &[f64], reconstruction: &Grid1D) -> Result<Vec<f64>> {
        Ok(match self {
            Qoi::Density => reconstruct(states, *reconstruction).values,
            Qoi::Moment(k) => vec![moment(states, *k)?],
            Qoi::Tail(w) => vec![tail_distribution(states, *w)],
            Qoi::Lorenz => lorenz_curve(states)?.tabulate(),
            Qoi::Gini => vec![gini(&lorenz_curve(states)?)],
            Qoi::TailIndex => vec![hill_estimator(states)?],
        })
    }

    /// Evaluates on cell values of a density on the reconstruction grid.
    pub fn eval_field(&self, field: &CellField<'_>) -> Result<Vec<f64>> {
        Ok(match self {
            Qoi::Density => field.values.to_vec(),
            Qoi::Moment(k) => vec![field.moment(*k)],
            Qoi::Tail(w) => vec![field.tail(*w)],
            Qoi::Lorenz => field.lorenz()?.tabulate(),
            Qoi::Gini => vec![gini(&field.lorenz()?)],
            Qoi::TailIndex => vec![field.hill()?],
        })
    }
}

impl fmt::Display for Qoi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Qoi::Density => f.write_str("density"),
            Qoi::Moment(k) => write!(f, "moment:{k}"),
            Qoi::Tail(w) => write!(f, "tail:{w}"),
            Qoi::Lorenz => f.write_str("lorenz"),
            Qoi::Gini => f.write_str("gini"),
            Qoi::TailIndex => f.write_str("tail-index"),
        }
    }
}

impl FromStr for Qoi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Configuration(format!(
            "unknown QoI `{s}`; expected density, moment:<k>, tail:<w>, lorenz, gini or tail-index"
        ));
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        match (head, arg) {
            ("density", None) => Ok(Qoi::Density),
            ("lorenz", None) => Ok(Qoi::Lorenz),
            ("gini", None) => Ok(Qoi::Gini),
            ("tail-index", None) => Ok(Qoi::TailIndex),
            ("moment", Some(k)) => match k.parse::<u32>() {
                Ok(k) if k >= 1 => Ok(Qoi::Moment(k)),
                _ => Err(bad()),
            },
            ("tail", Some(w)) => w.parse::<f64>().ok().filter(|w| w.is_finite()).map(Qoi::Tail).ok_or_else(bad),
            _ => Err(bad()),
        }
    }
}

/// Cell averages of an analytic steady state on the reconstruction grid.
pub fn steady_state_cells(state: &SteadyState, grid: &Grid1D) -> Vec<f64> {
    let rule = GaussLegendre::new(8);
    grid.edges()
        .windows(2)
        .map(|e| rule.integrate(e[0], e[1], |w| state.density(w)) / (e[1] - e[0]))
        .collect()
}

/// A solver-grid density sampled at the reconstruction cell centers.
pub fn resample_density(density: &GridDensity, grid: &Grid1D) -> Vec<f64> {
    grid.centers().iter().map(|&w| density.interpolate(w)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meanfield::{SteadyFamily, SteadyStateParams};
    use crate::quadrature::integrate_to_infinity;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(a: f64, b: f64, n: usize) -> Grid1D {
        Grid1D::new(a, b, n).unwrap()
    }

    #[test]
    fn single_particle_delta() {
        let g = grid(0.0, 1.0, 10);
        let h = reconstruct(&[g.center(3)], g);
        assert_eq!(h.values[3], 10.0);
        assert_eq!(h.values.iter().filter(|&&v| v != 0.0).count(), 1);
    }

    #[test]
    fn out_of_window_particles_are_reported() {
        let g = grid(0.0, 1.0, 10);
        let h = reconstruct(&[0.5, 1.5, -0.1, 1.0], g);
        assert_eq!(h.out_of_window, 2);
        assert!((h.mass() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn uniform_ensemble_cells_match_binomial_oracle() {
        let g = grid(-1.0, 1.0, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h = reconstruct(&xs, g);
        let p = 1.0 / 20.0;
        let se = (p * (1.0 - p) / n as f64).sqrt() / g.dw();
        // 20 cells at 4 standard errors keeps the family-wise false alarm rate small
        for v in &h.values {
            assert!((v - 0.5).abs() < 4.0 * se, "{v}");
        }
        assert!((h.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reconstruction_error_decays_like_inverse_sqrt_n() {
        // f(w) = (1 + w)/2 on [-1, 1]; inverse CDF sqrt(4u) - 1
        let g = grid(-1.0, 1.0, 20);
        let exact: Vec<f64> = g.centers().iter().map(|w| 0.5 * (1.0 + w)).collect();
        let ns = [1_000usize, 4_000, 16_000, 64_000];
        let mut logs = Vec::new();
        for &n in &ns {
            let mut err = 0.0;
            let reps = 40;
            for r in 0..reps {
                let mut rng = ChaCha8Rng::seed_from_u64(1000 + r);
                let xs: Vec<f64> = (0..n).map(|_| (4.0 * rng.random::<f64>()).sqrt() - 1.0).collect();
                let h = reconstruct(&xs, g);
                err += h.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).sum::<f64>() * g.dw();
            }
            logs.push(((n as f64).ln(), (err / reps as f64).ln()));
        }
        let slope = least_squares_slope(&logs);
        assert!((slope + 0.5).abs() <= 0.15, "slope {slope}");
    }

    fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn moment_examples() {
        assert_eq!(moment(&[-1.0, 1.0], 1).unwrap(), 0.0);
        assert_eq!(moment(&[-1.0, 1.0], 2).unwrap(), 1.0);
        assert!(moment(&[], 1).is_err());
    }

    #[test]
    fn tail_examples() {
        let xs = [0.5, 1.0, 2.0];
        assert_eq!(tail_distribution(&xs, -1.0), 1.0);
        assert_eq!(tail_distribution(&xs, 5.0), 0.0);
        assert_eq!(tail_distribution(&xs, 1.0), 1.0 / 3.0);
    }

    #[test]
    fn inverse_gamma_tail_matches_quadrature() {
        let p = SteadyStateParams {
            family: SteadyFamily::InverseGamma,
            mean: 1.0,
            variance: 1.0,
            strength: 1.0,
        };
        let s = SteadyState::new(p).unwrap();
        let g = grid(0.0, 10.0, 20_000);
        let cells = steady_state_cells(&s, &g);
        let field = CellField::new(g, &cells).unwrap();
        // the field is truncated at 10, so compare mass in (1, 10] relative to (0, 10]
        let above = integrate_to_infinity(|w| s.density(w), 1.0, 1e-12, 0.0).unwrap();
        let beyond = integrate_to_infinity(|w| s.density(w), 10.0, 1e-12, 0.0).unwrap();
        let expected = (above - beyond) / (1.0 - beyond);
        assert!((field.tail(1.0) - expected).abs() < 1e-6, "{} vs {expected}", field.tail(1.0));
        // closed form of the untruncated tail: P(Gamma(3, 2) < 2/w) at w = 1
        let closed = 1.0 - (-2.0f64).exp() * (1.0 + 2.0 + 2.0);
        assert!((above - closed).abs() < 1e-10);
    }

    #[test]
    fn lorenz_examples() {
        let c = lorenz_curve(&[1.0; 4]).unwrap();
        assert_eq!(c.population, c.share);
        assert_eq!(gini(&c), 0.0);
        let c = lorenz_curve(&[0.0, 1.0]).unwrap();
        assert_eq!(c.population, vec![0.0, 0.5, 1.0]);
        assert_eq!(c.share, vec![0.0, 0.0, 1.0]);
        assert_eq!(gini(&c), 0.5);
        let unequal = gini(&lorenz_curve(&[0.0, 0.0, 0.0, 1.0]).unwrap());
        let milder = gini(&lorenz_curve(&[0.0, 1.0, 1.0, 1.0]).unwrap());
        assert!(unequal > milder);
        assert!(lorenz_curve(&[1.0, -1.0]).is_err());
        assert!(lorenz_curve(&[0.0, 0.0]).is_err());
    }

    #[test]
    fn lorenz_field_of_uniform_wealth() {
        // uniform on [0, 2]: L(F) = F², G = 1/3
        let g = grid(0.0, 2.0, 2000);
        let vals = vec![0.5; 2000];
        let f = CellField::new(g, &vals).unwrap();
        let c = f.lorenz().unwrap();
        assert!((c.at(0.5) - 0.25).abs() < 1e-6);
        assert!((gini(&c) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn hill_recovers_pareto_exponent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let alpha = 3.0;
        let xs: Vec<f64> = (0..200_000).map(|_| (1.0 - rng.random::<f64>()).powf(-1.0 / alpha)).collect();
        let h = hill_estimator(&xs).unwrap();
        // k = 10⁴ exceedances: standard error α/√k
        assert!((h - alpha).abs() < 4.0 * alpha / 100.0, "{h}");
    }

    #[test]
    fn field_hill_of_pareto_density() {
        let alpha = 3.0;
        let g = grid(0.0, 200.0, 400_000);
        let vals: Vec<f64> = g
            .centers()
            .iter()
            .map(|&w| if w >= 1.0 { alpha * w.powf(-alpha - 1.0) } else { 0.0 })
            .collect();
        let h = CellField::new(g, &vals).unwrap().hill().unwrap();
        assert!((h - alpha).abs() < 0.05, "{h}");
    }

    #[test]
    fn qoi_parsing_round_trips() {
        for q in [Qoi::Density, Qoi::Moment(2), Qoi::Tail(1.5), Qoi::Lorenz, Qoi::Gini, Qoi::TailIndex] {
            assert_eq!(q.to_string().parse::<Qoi>().unwrap(), q);
        }
        assert!("moment:0".parse::<Qoi>().is_err());
        assert!("entropy".parse::<Qoi>().unwrap_err().is_configuration());
    }

    #[test]
    fn field_and_particle_density_qoi_agree_in_shape() {
        let g = grid(-1.0, 1.0, 100);
        let xs = [0.1, 0.2, -0.3];
        let v = Qoi::Density.eval_particles(&xs, &g).unwrap();
        assert_eq!(v.len(), Qoi::Density.len(&g));
        let field = Qoi::Density.eval_field(&CellField::new(g, &v).unwrap()).unwrap();
        assert_eq!(v, field);
    }

    proptest! {
        #[test]
        fn lorenz_curve_is_convex_and_bounded(xs in prop::collection::vec(0.0f64..100.0, 2..200)) {
            prop_assume!(xs.iter().sum::<f64>() > 0.0);
            let c = lorenz_curve(&xs).unwrap();
            prop_assert_eq!(c.population[0], 0.0);
            prop_assert_eq!(c.share[0], 0.0);
            prop_assert_eq!(*c.population.last().unwrap(), 1.0);
            prop_assert_eq!(*c.share.last().unwrap(), 1.0);
            let slopes: Vec<f64> = c.population.windows(2).zip(c.share.windows(2))
                .map(|(p, l)| (l[1] - l[0]) / (p[1] - p[0])).collect();
            for s in slopes.windows(2) {
                prop_assert!(s[1] >= s[0] - 1e-9);
            }
            for (p, l) in c.population.iter().zip(&c.share) {
                prop_assert!(*l <= *p + 1e-12);
            }
        }

        #[test]
        fn gini_is_bounded(xs in prop::collection::vec(0.0f64..100.0, 2..200)) {
            prop_assume!(xs.iter().sum::<f64>() > 0.0);
            let g = gini(&lorenz_curve(&xs).unwrap());
            let n = xs.len() as f64;
            prop_assert!(g >= -1e-12);
            prop_assert!(g <= 1.0 - 1.0 / n + 1e-12);
        }

        #[test]
        fn lorenz_is_scale_invariant(xs in prop::collection::vec(1u32..1000, 2..100), k in 0i32..6) {
            // powers of two scale exactly
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let c = 2f64.powi(k);
            let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
            prop_assert_eq!(lorenz_curve(&xs).unwrap(), lorenz_curve(&scaled).unwrap());
        }

        #[test]
        fn in_window_reconstruction_has_unit_mass(xs in prop::collection::vec(-1.0f64..=1.0, 1..500)) {
            let h = reconstruct(&xs, Grid1D::new(-1.0, 1.0, 37).unwrap());
            prop_assert_eq!(h.out_of_window, 0);
            prop_assert!((h.mass() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn tail_and_complement_sum_to_one(xs in prop::collection::vec(-5.0f64..5.0, 1..300), w in -6.0f64..6.0) {
            let above = tail_distribution(&xs, w);
            let at_or_below = xs.iter().filter(|&&x| x <= w).count() as f64 / xs.len() as f64;
            prop_assert!((above + at_or_below - 1.0).abs() < 1e-15);
        }
    }
}
