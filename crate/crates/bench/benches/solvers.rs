use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use kinetic_uq::dsmc::dsmc_step;
use kinetic_uq::meanfield::{fp_step, Grid1D};
use kinetic_uq::qoi::reconstruct;
use kinetic_uq::uq::{optimal_lambda_hat, QoISampleSet};
use kinetic_uq_bench::{density, ensemble, model};

fn dsmc(c: &mut Criterion) {
    let mut group = c.benchmark_group("dsmc_step");
    for key in ["opinion-A", "wealth-A", "bounded-confidence"] {
        let m = model(key);
        let base = ensemble(&m, 10_000);
        group.bench_function(BenchmarkId::new(key, 10_000), |b| {
            b.iter_batched_ref(|| base.clone(), |ens| dsmc_step(ens, &m, 0.1, 0.1).unwrap(), BatchSize::SmallInput)
        });
    }
    group.finish();
}

fn fokker_planck(c: &mut Criterion) {
    let mut group = c.benchmark_group("fp_step");
    for (key, cells) in [("opinion-A", 200), ("opinion-A", 800), ("bounded-confidence", 200), ("wealth-A", 200)] {
        let m = model(key);
        let f = density(&m, cells);
        group.bench_function(BenchmarkId::new(key, cells), |b| b.iter(|| fp_step(&f, 0.01, &m).unwrap()));
    }
    group.finish();
}

fn reconstruction(c: &mut Criterion) {
    let m = model("opinion-A");
    let states = ensemble(&m, 100_000).values;
    let grid = Grid1D::window(&m, 100).unwrap();
    c.bench_function("reconstruct/100000", |b| b.iter(|| reconstruct(&states, grid)));
}

fn lambda(c: &mut Criterion) {
    let rows = |shift: f64| (0..1280).map(|k| (0..100).map(|j| ((k * 31 + j * 7) % 97) as f64 + shift).collect()).collect();
    let primary = QoISampleSet::new(rows(0.0), Vec::new()).unwrap();
    let control = QoISampleSet::new(rows(0.5), Vec::new()).unwrap();
    let mean = vec![48.5; 100];
    c.bench_function("optimal_lambda_hat/1280x100", |b| {
        b.iter(|| optimal_lambda_hat(&primary, &control, &mean).unwrap())
    });
}

criterion_group!(benches, dsmc, fokker_planck, reconstruction, lambda);
criterion_main!(benches);
