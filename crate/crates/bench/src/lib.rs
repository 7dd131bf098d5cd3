//! Shared fixtures for the solver benchmarks.

use kinetic_uq::dsmc::{sample_initial, ParticleEnsemble, Purpose, RngStreamSpec, StreamKey};
use kinetic_uq::meanfield::{Grid1D, GridDensity};
use kinetic_uq::models::ModelSpec;

pub fn model(key: &str) -> ModelSpec {
    ModelSpec::catalog(key).expect("catalog model")
}

/// Initial ensemble of `n` particles at the mean of the uncertainty law.
pub fn ensemble(model: &ModelSpec, n: usize) -> ParticleEnsemble {
    let rng = RngStreamSpec::new(7, StreamKey::new(0, 0, Purpose::Particles)).rng();
    sample_initial(model, n, model.uncertainty.mean(), rng).expect("initial ensemble")
}

/// Projected initial condition on `cells` cells of the FP grid.
pub fn density(model: &ModelSpec, cells: usize) -> GridDensity {
    let grid = Grid1D::for_model(model, cells).expect("grid");
    GridDensity::project_initial(model, grid, model.uncertainty.mean()).expect("projection")
}
