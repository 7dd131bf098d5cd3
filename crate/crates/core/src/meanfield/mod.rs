//! Mean-field Fokker–Planck solver.
//!
//! The equation `∂t f + ∂w(B[f] f) = ∂w²(Dfp f)` with `Dfp = σ² D² / 2` and
//! nonlocal drift `B[f](w) = ∫ P(v, w, z) f(v) dv` is discretized on cell
//! centers with an exponentially fitted (Chang–Cooper / Scharfetter–Gummel)
//! flux
//!
//! ```text
//! F_{i+1/2} = Dfp_{i+1/2} / Δw · [Bern(-λ) f_{i+1} - Bern(λ) f_i]
//! λ_{i+1/2} = ln(Dfp_{i+1} / Dfp_i) - ∫_{w_i}^{w_{i+1}} B / Dfp
//! ```
//!
//! where `Bern(x) = x / (e^x - 1)` and `Dfp_{i+1/2}` is the logarithmic mean
//! of the neighbouring values. Zero flux holds exactly on the analytic steady
//! state sampled at the centers. Time stepping freezes `B` at the old density
//! and solves the resulting tridiagonal M-matrix system, so positivity holds
//! for any step and mass is conserved to roundoff.

mod steady;

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::models::{InteractionCoefficients, ModelSpec};
use crate::quadrature::GaussLegendre;

pub use steady::{steady_state_density, SteadyFamily, SteadyState, SteadyStateParams};

/// Lower end of the wealth grid; keeps clear of the `w = 0` singularity of
/// the inverse-gamma profile.
pub const WEALTH_GRID_LOWER: f64 = 1e-6;

/// Values this far below zero are clipped; anything lower is a solver bug.
pub const NEGATIVITY_TOL: f64 = 1e-13;

/// Gauss points per interface for `∫ B / Dfp`.
const FLUX_QUADRATURE_POINTS: usize = 16;

/// Uniform cell-centered grid on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid1D {
    a: f64,
    b: f64,
    cells: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, cells: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Argument(format!("grid needs finite a < b, got [{a}, {b}]")));
        }
        if cells < 4 {
            return Err(Error::Argument(format!("grid needs at least 4 cells, got {cells}")));
        }
        Ok(Self { a, b, cells })
    }

    /// Solver grid for a model: `V` itself, or `[1e-6, W_max]` on the half-line.
    pub fn for_model(model: &ModelSpec, cells: usize) -> Result<Self> {
        let lower = if model.domain.half_line {
            model.domain.lower.max(WEALTH_GRID_LOWER)
        } else {
            model.domain.lower
        };
        Self::new(lower, model.domain.upper, cells)
    }

    /// Reconstruction window: `V` (truncated on the half-line).
    pub fn window(model: &ModelSpec, cells: usize) -> Result<Self> {
        Self::new(model.domain.lower, model.domain.upper, cells)
    }

    pub fn lower(&self) -> f64 {
        self.a
    }

    pub fn upper(&self) -> f64 {
        self.b
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn dw(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.a + (i as f64 + 0.5) * self.dw()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|i| self.center(i)).collect()
    }

    /// The `cells + 1` cell boundaries.
    pub fn edges(&self) -> Vec<f64> {
        let dw = self.dw();
        (0..=self.cells)
            .map(|i| if i == self.cells { self.b } else { self.a + i as f64 * dw })
            .collect()
    }

    /// Index of the cell containing `w`, with the right end in the last cell.
    pub fn locate(&self, w: f64) -> Option<usize> {
        if !(w >= self.a && w <= self.b) {
            return None;
        }
        let i = ((w - self.a) / self.dw()) as usize;
        Some(i.min(self.cells - 1))
    }
}

/// Density on a [`Grid1D`] at time `t` for node `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    pub z: f64,
    pub t: f64,
}

impl GridDensity {
    pub fn new(grid: Grid1D, values: Vec<f64>, z: f64) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::Argument(format!(
                "{} values for a grid with {} cells",
                values.len(),
                grid.cells()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::Argument(format!("density values must be finite and nonnegative, found {v}")));
        }
        Ok(Self { grid, values, z, t: 0.0 })
    }

    /// Cell averages of `f0(·, z)`, rescaled to unit discrete mass.
    pub fn project_initial(model: &ModelSpec, grid: Grid1D, z: f64) -> Result<Self> {
        model.check_uncertainty(z)?;
        let values = model.initial.cell_averages(z, &model.domain, &grid.edges())?;
        let mut d = Self::new(grid, values, z)?;
        d.normalize()?;
        Ok(d)
    }

    /// Point values of an analytic steady state at the centers, rescaled to
    /// unit discrete mass. This is the discrete fixed point of [`fp_step`].
    pub fn project_steady_state(state: &SteadyState, grid: Grid1D, z: f64) -> Result<Self> {
        let values = grid.centers().iter().map(|&w| state.density(w)).collect();
        let mut d = Self::new(grid, values, z)?;
        d.normalize()?;
        Ok(d)
    }

    fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0) {
            return Err(Error::Numeric("projected density has zero mass on the grid".into()));
        }
        self.values.iter_mut().for_each(|v| *v /= mass);
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.grid.dw() * self.values.iter().sum::<f64>()
    }

    /// Discrete first moment `Δw Σ w_i f_i`.
    pub fn first_moment(&self) -> f64 {
        let dw = self.grid.dw();
        self.values
            .iter()
            .enumerate()
            .map(|(i, f)| self.grid.center(i) * f)
            .sum::<f64>()
            * dw
    }

    pub fn mean(&self) -> f64 {
        self.first_moment() / self.mass()
    }

    /// Linear interpolation between centers, constant beyond the outer ones.
    pub fn interpolate(&self, w: f64) -> f64 {
        let g = &self.grid;
        let s = (w - g.lower()) / g.dw() - 0.5;
        if s <= 0.0 {
            return self.values[0];
        }
        let last = g.cells() - 1;
        if s >= last as f64 {
            return self.values[last];
        }
        let i = s as usize;
        let frac = s - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Two columns: cell center and value.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut body = String::from("w,density\n");
        for (i, v) in self.values.iter().enumerate() {
            body.push_str(&format!("{:e},{v:e}\n", self.grid.center(i)));
        }
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Nonlocal drift `B(w)` for a frozen density.
enum Drift<'a> {
    /// `B(w) = c0 + c1 w`, from the first two discrete moments.
    Affine { c0: f64, c1: f64 },
    /// Kernel depends on `|v - w|`: integrate with 2 Gauss points per cell.
    Quadrature {
        density: &'a GridDensity,
        coefficients: InteractionCoefficients,
        nodes: [f64; 2],
    },
}

impl<'a> Drift<'a> {
    fn new(density: &'a GridDensity, model: &ModelSpec) -> Self {
        let z = density.z;
        let c = model.coefficients;
        if c.depends_on_distance() {
            let r = 0.5 / 3f64.sqrt();
            return Drift::Quadrature {
                density,
                coefficients: c,
                nodes: [0.5 - r, 0.5 + r],
            };
        }
        // P(v, w) = ½[(p1 + q2 - 2) w + (p2 + q1) v]
        let [p1, p2, q1, q2] = c.at(z, 0.0);
        let m0 = density.mass();
        let m1 = density.first_moment();
        Drift::Affine {
            c0: 0.5 * (p2 + q1) * m1,
            c1: 0.5 * (p1 + q2 - 2.0) * m0,
        }
    }

    fn eval(&self, w: f64) -> f64 {
        match self {
            Drift::Affine { c0, c1 } => c0 + c1 * w,
            Drift::Quadrature {
                density,
                coefficients,
                nodes,
            } => {
                let g = &density.grid;
                let dw = g.dw();
                let mut acc = 0.0;
                for (j, &f) in density.values.iter().enumerate() {
                    if f == 0.0 {
                        continue;
                    }
                    let left = g.lower() + j as f64 * dw;
                    let mut cell = 0.0;
                    for s in nodes {
                        let v = left + s * dw;
                        cell += crate::models::drift_kernel_unchecked(v, w, density.z, coefficients);
                    }
                    acc += 0.5 * dw * f * cell;
                }
                acc
            }
        }
    }
}

/// `B(w)` at the `cells + 1` cell boundaries of the density's grid.
pub fn assemble_drift(density: &GridDensity, model: &ModelSpec) -> Result<Vec<f64>> {
    model.check_uncertainty(density.z)?;
    let drift = Drift::new(density, model);
    Ok(density.grid.edges().iter().map(|&w| drift.eval(w)).collect())
}

#[inline]
fn bernoulli(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        x / x.exp_m1()
    }
}

fn log_mean(a: f64, b: f64) -> f64 {
    let r = b / a;
    if (r - 1.0).abs() < 1e-6 {
        // series of (b - a) / ln(b / a) around r = 1
        let d = r - 1.0;
        a * (1.0 + d / 2.0 - d * d / 12.0)
    } else {
        (b - a) / r.ln()
    }
}

/// Per-interface data of the fitted flux for a frozen drift.
struct FluxTerms {
    /// `ln(Dfp_{i+1} / Dfp_i) - ∫ B / Dfp`; `None` without diffusion.
    lambda: Vec<f64>,
    /// `∫ 1 / Dfp` (with diffusion) or `Δw` (without), the response of the
    /// fitted exponent to a constant drift shift.
    shift: Vec<f64>,
    /// Logarithmic mean of `Dfp` (with diffusion) or the cell-integrated drift.
    scale: Vec<f64>,
    diffusive: bool,
}

impl FluxTerms {
    fn new(density: &GridDensity, model: &ModelSpec) -> Result<Self> {
        let grid = density.grid;
        let z = density.z;
        let half_var = 0.5 * model.noise.variance;
        let drift = Drift::new(density, model);
        let rule = GaussLegendre::new(FLUX_QUADRATURE_POINTS);
        let dfp = |w: f64| {
            let d = model.diffusion.value(w, z);
            half_var * d * d
        };
        let centers = grid.centers();
        let n = grid.cells() - 1;
        let mut terms = FluxTerms {
            lambda: Vec::with_capacity(n),
            shift: Vec::with_capacity(n),
            scale: Vec::with_capacity(n),
            diffusive: half_var > 0.0,
        };
        for pair in centers.windows(2) {
            let (wl, wr) = (pair[0], pair[1]);
            if !terms.diffusive {
                terms.lambda.push(0.0);
                terms.shift.push(wr - wl);
                terms.scale.push(rule.integrate(wl, wr, |w| drift.eval(w)));
                continue;
            }
            let (dl, dr) = (dfp(wl), dfp(wr));
            if !(dl > 0.0 && dr > 0.0) {
                return Err(Error::Numeric(format!(
                    "diffusion vanishes inside the grid near w = {wl}; the fitted flux is undefined"
                )));
            }
            let lambda = (dr / dl).ln() - rule.integrate(wl, wr, |w| drift.eval(w) / dfp(w));
            if !lambda.is_finite() {
                return Err(Error::Numeric(format!("non-finite flux exponent at w = {wl}")));
            }
            terms.lambda.push(lambda);
            terms.shift.push(rule.integrate(wl, wr, |w| 1.0 / dfp(w)));
            terms.scale.push(log_mean(dl, dr));
        }
        Ok(terms)
    }

    /// `(a, c)` with `Δw F_{i+1/2} = a f_{i+1} - c f_i` after adding `delta` to the drift.
    fn coefficients(&self, delta: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.lambda.iter().zip(&self.shift).zip(&self.scale).map(move |((&l, &h), &s)| {
            if self.diffusive {
                let lambda = l - delta * h;
                (s * bernoulli(-lambda), s * bernoulli(lambda))
            } else {
                // upwind limit of the fitted flux
                let b = s + delta * h;
                (b.min(0.0).abs(), b.max(0.0))
            }
        })
    }
}

fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) -> Result<()> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::Numeric("singular tridiagonal system".into()));
    }
    c[0] = upper.first().copied().unwrap_or(0.0) / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag[i] - lower[i - 1] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::Numeric(format!("tridiagonal elimination broke down at row {i}")));
        }
        if i < n - 1 {
            c[i] = upper[i] / denom;
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

fn implicit_solve(density: &GridDensity, terms: &FluxTerms, delta: f64, dt: f64) -> Result<Vec<f64>> {
    let n = density.grid.cells();
    let r = dt / (density.grid.dw() * density.grid.dw());
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n - 1];
    let mut lower = vec![0.0; n - 1];
    for (i, (a, c)) in terms.coefficients(delta).enumerate() {
        // interface between cells i and i + 1
        diag[i] += r * c;
        diag[i + 1] += r * a;
        upper[i] = -r * a;
        lower[i] = -r * c;
    }
    let mut values = density.values.clone();
    solve_tridiagonal(&lower, &diag, &upper, &mut values)?;
    Ok(values)
}

fn first_moment_of(grid: &Grid1D, values: &[f64]) -> f64 {
    values.iter().enumerate().map(|(i, f)| grid.center(i) * f).sum::<f64>() * grid.dw()
}

/// Drift shift that keeps the discrete first moment of a mean-conserving
/// model fixed; the exponential fitting alone conserves it only to `O(Δw²)`.
fn mean_preserving_shift(density: &GridDensity, terms: &FluxTerms, dt: f64, first: Vec<f64>) -> Result<Vec<f64>> {
    let grid = density.grid;
    let target = density.first_moment();
    let tol = 1e-14 * (grid.upper().abs().max(grid.lower().abs())) * density.mass().max(1e-300);
    let residual = |v: &[f64]| first_moment_of(&grid, v) - target;
    let (mut d0, mut r0) = (0.0, residual(&first));
    if r0.abs() <= tol {
        return Ok(first);
    }
    let mut best = (r0.abs(), first);
    // the exponent responds to a shift through ∫ 1/Dfp; probe on that scale
    let probe = r0.abs().max(1e-12) / dt.max(1e-12);
    let mut d1 = -r0.signum() * probe;
    let mut v1 = implicit_solve(density, terms, d1, dt)?;
    let mut r1 = residual(&v1);
    for _ in 0..20 {
        if r1.abs() < best.0 {
            best = (r1.abs(), v1.clone());
        }
        if r1.abs() <= tol || r1 == r0 {
            break;
        }
        let d2 = d1 - r1 * (d1 - d0) / (r1 - r0);
        (d0, r0) = (d1, r1);
        d1 = d2;
        v1 = implicit_solve(density, terms, d1, dt)?;
        r1 = residual(&v1);
    }
    if r1.abs() < best.0 {
        best = (r1.abs(), v1);
    }
    Ok(best.1)
}

/// One semi-implicit step of length `dt` with zero-flux boundaries.
///
/// For mean-conserving models the frozen drift is shifted by a constant
/// chosen so that the discrete mean is conserved as well as the mass.
pub fn fp_step(density: &GridDensity, dt: f64, model: &ModelSpec) -> Result<GridDensity> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    let terms = FluxTerms::new(density, model)?;
    let mut values = implicit_solve(density, &terms, 0.0, dt)?;
    if model.is_mean_conserving() {
        values = mean_preserving_shift(density, &terms, dt, values)?;
    }
    for v in values.iter_mut() {
        if *v < 0.0 {
            if *v < -NEGATIVITY_TOL {
                return Err(Error::InvariantViolation(format!(
                    "Fokker–Planck step produced negative density {v}"
                )));
            }
            *v = 0.0;
        }
        if !v.is_finite() {
            return Err(Error::Numeric("Fokker–Planck step produced a non-finite value".into()));
        }
    }
    Ok(GridDensity {
        grid: density.grid,
        values,
        z: density.z,
        t: density.t + dt,
    })
}

/// Step index used for a requested time: the last step at or before it.
pub fn fp_snapshot_step(t: f64, dt: f64) -> usize {
    (t / dt + 1e-9).floor().max(0.0) as usize
}

/// Marches from the projected `f0(·, z)` and hands each snapshot to `visit`.
pub fn run_fp_with<F>(
    model: &ModelSpec,
    grid: Grid1D,
    z: f64,
    t_final: f64,
    dt: f64,
    snapshots: &[f64],
    mut visit: F,
) -> Result<()>
where
    F: FnMut(usize, &GridDensity) -> Result<()>,
{
    if !(dt > 0.0) {
        return Err(Error::Argument(format!("time step must be positive, got {dt}")));
    }
    if !(t_final >= 0.0) || snapshots.iter().any(|&t| t < 0.0 || t > t_final * (1.0 + 1e-12)) {
        return Err(Error::Argument(format!("snapshot times must lie in [0, {t_final}]")));
    }
    if snapshots.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("snapshot times must be sorted".into()));
    }
    let targets: Vec<usize> = snapshots.iter().map(|&t| fp_snapshot_step(t, dt)).collect();
    let last = targets.last().copied().unwrap_or(0);
    let mut f = GridDensity::project_initial(model, grid, z)?;
    let mut next = 0;
    for step in 0..=last {
        if step > 0 {
            f = fp_step(&f, dt, model)?;
            f.t = step as f64 * dt;
        }
        while next < targets.len() && targets[next] == step {
            visit(next, &f)?;
            next += 1;
        }
    }
    Ok(())
}

/// Densities at the requested times (each at the last step not after it).
pub fn run_fp(
    model: &ModelSpec,
    grid: Grid1D,
    z: f64,
    t_final: f64,
    dt: f64,
    snapshots: &[f64],
) -> Result<Vec<GridDensity>> {
    let mut out = Vec::with_capacity(snapshots.len());
    run_fp_with(model, grid, z, t_final, dt, snapshots, |_, f| {
        out.push(f.clone());
        Ok(())
    })?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Affine, DiffusionSpec};
    use std::sync::Arc;

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn grid_geometry() {
        let g = Grid1D::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.centers(), vec![-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(g.edges(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(g.locate(1.0), Some(3));
        assert_eq!(g.locate(-1.0), Some(0));
        assert_eq!(g.locate(1.1), None);
        assert!(Grid1D::new(0.0, 1.0, 3).is_err());
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
    }

    #[test]
    fn bernoulli_branches_agree() {
        for x in [1e-9, -1e-9, 1e-7, -1e-7] {
            let direct = x / f64::exp_m1(x);
            assert!((bernoulli(x) - direct).abs() < 1e-14);
        }
        assert!((bernoulli(-800.0) - 800.0).abs() < 1e-9);
        assert!(bernoulli(800.0) >= 0.0);
    }

    #[test]
    fn wealth_drift_is_affine_in_mean() {
        let model = ModelSpec::catalog("wealth-B").unwrap();
        let grid = Grid1D::for_model(&model, 50).unwrap();
        let f = GridDensity::project_initial(&model, grid, 0.2).unwrap();
        let b = assemble_drift(&f, &model).unwrap();
        let lambda = 0.5 + 0.25 * 0.2;
        for (w, bw) in grid.edges().iter().zip(&b) {
            assert!((bw - lambda * (f.mean() - w)).abs() < 1e-13);
        }
    }

    #[test]
    fn symmetric_density_has_zero_drift_at_origin() {
        let model = ModelSpec::catalog("bounded-confidence").unwrap();
        let grid = Grid1D::for_model(&model, 40).unwrap();
        let f = GridDensity::project_initial(&model, grid, 1.2).unwrap();
        let b = assemble_drift(&f, &model).unwrap();
        assert!(b[20].abs() < 1e-14);
        // antisymmetry of the whole profile
        for i in 0..=40 {
            assert!((b[i] + b[40 - i]).abs() < 1e-13);
        }
    }

    #[test]
    fn quadrature_drift_matches_affine_drift_for_uniform_compromise() {
        let model = ModelSpec::catalog("opinion-B").unwrap();
        let grid = Grid1D::for_model(&model, 40).unwrap();
        let f = GridDensity::project_initial(&model, grid, 0.0).unwrap();
        let affine = Drift::new(&f, &model);
        let quad = Drift::Quadrature {
            density: &f,
            coefficients: model.coefficients,
            nodes: [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()],
        };
        for w in [-0.9, -0.2, 0.0, 0.7] {
            assert!((affine.eval(w) - quad.eval(w)).abs() < 1e-13);
        }
    }

    #[test]
    fn steady_states_are_preserved() {
        for (key, z) in [("opinion-A", 0.7), ("opinion-B", 0.3), ("wealth-A", 0.4), ("wealth-B", -0.5)] {
            let model = ModelSpec::catalog(key).unwrap();
            let grid = Grid1D::for_model(&model, 200).unwrap();
            let s = SteadyState::new(SteadyStateParams::for_model(&model, z).unwrap()).unwrap();
            let f0 = GridDensity::project_steady_state(&s, grid, z).unwrap();
            let mut f = f0.clone();
            for _ in 0..100 {
                f = fp_step(&f, 0.1, &model).unwrap();
            }
            let change = rel_l2(&f.values, &f0.values);
            assert!(change < 1e-8, "{key}: {change:e}");
            assert!((f.mass() - f0.mass()).abs() < 1e-12, "{key}");
        }
    }

    #[test]
    fn mass_is_conserved_and_values_stay_nonnegative() {
        let model = ModelSpec::catalog("bounded-confidence").unwrap();
        let grid = Grid1D::for_model(&model, 100).unwrap();
        let mut f = GridDensity::project_initial(&model, grid, 1.1).unwrap();
        let m0 = f.mass();
        for _ in 0..200 {
            f = fp_step(&f, 0.05, &model).unwrap();
            assert!(f.values.iter().all(|&v| v >= 0.0));
        }
        assert!((f.mass() - m0).abs() < 1e-12);
    }

    #[test]
    fn pure_diffusion_relaxes_monotonically() {
        let mut model = ModelSpec::catalog("opinion-B").unwrap();
        model.coefficients = InteractionCoefficients::General {
            p1: Affine::constant(1.0),
            p2: Affine::constant(0.0),
            q1: Affine::constant(0.0),
            q2: Affine::constant(1.0),
        };
        model.diffusion = DiffusionSpec::Custom(Arc::new(|_, _| 1.0));
        model.noise.variance = 0.2;
        let grid = Grid1D::for_model(&model, 64).unwrap();
        let mut f = GridDensity::project_initial(&model, grid, 0.0).unwrap();
        let dist = |f: &GridDensity| f.values.iter().map(|v| (v - 0.5) * (v - 0.5)).sum::<f64>().sqrt();
        let mut prev = dist(&f);
        let initial = prev;
        for _ in 0..150 {
            f = fp_step(&f, 0.1, &model).unwrap();
            let d = dist(&f);
            assert!(d < prev, "{d:e} {prev:e}");
            prev = d;
        }
        assert!(prev < 1e-3 * initial);
    }

    #[test]
    fn second_order_self_convergence() {
        let mut model = ModelSpec::catalog("opinion-B").unwrap();
        model.initial = crate::models::InitialCondition::DoubleGaussian {
            centers: [-0.3, 0.4],
            sharpness: 20.0,
        };
        model.noise.variance = 0.05;
        let (t, dt) = (0.5, 0.01);
        let solve = |cells| run_fp(&model, Grid1D::new(-1.0, 1.0, cells).unwrap(), 0.0, t, dt, &[t]).unwrap().remove(0);
        let reference = solve(1280);
        let err = |cells: usize| {
            let f = solve(cells);
            let dw = f.grid.dw();
            f.values
                .iter()
                .enumerate()
                .map(|(i, v)| (v - reference.interpolate(f.grid.center(i))).powi(2) * dw)
                .sum::<f64>()
                .sqrt()
        };
        let errors: Vec<f64> = [20, 40, 80].iter().map(|&n| err(n)).collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}, errors {errors:?}");
        }
    }

    #[test]
    fn mean_is_conserved_for_mean_conserving_models() {
        for (key, z, t) in [("opinion-A", 0.5, 5.0), ("wealth-B", 0.3, 5.0)] {
            let model = ModelSpec::catalog(key).unwrap();
            let grid = Grid1D::for_model(&model, 200).unwrap();
            let snaps = run_fp(&model, grid, z, t, 0.01, &[0.0, t]).unwrap();
            let drift = (snaps[1].mean() - snaps[0].mean()).abs();
            assert!(drift < 1e-8, "{key}: {drift:e}");
        }
    }

    #[test]
    fn zero_time_returns_projection() {
        let model = ModelSpec::catalog("opinion-A").unwrap();
        let grid = Grid1D::for_model(&model, 40).unwrap();
        let snaps = run_fp(&model, grid, 0.2, 0.0, 0.1, &[0.0]).unwrap();
        let proj = GridDensity::project_initial(&model, grid, 0.2).unwrap();
        assert_eq!(snaps[0], proj);
    }

    #[test]
    fn density_csv_has_two_columns() {
        let model = ModelSpec::catalog("opinion-A").unwrap();
        let f = GridDensity::project_initial(&model, Grid1D::for_model(&model, 8).unwrap(), 0.2).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        f.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().count(), 9);
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 2));
    }
}
