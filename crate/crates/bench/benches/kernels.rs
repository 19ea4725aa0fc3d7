use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gauss_extremes::asymptotics::{ruin_asymptotic, ClosedForm};
use gauss_extremes::exceedance::mc_sup_prob_nested;
use gauss_extremes::pickands::{piterbarg_estimate, Estimator, PiterbargSpec};
use gauss_extremes::special::normal_tail;
use gauss_extremes::{sample_paths, CorrelationModel, Grid, McBudget, TrendFunction};

fn path_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_paths");
    let n = 200;
    for (name, model, m) in [
        ("bridge", CorrelationModel::BrownianBridge, 4096),
        ("fbm_markov", CorrelationModel::fbm(1.0).unwrap(), 4096),
        ("fbm_dense", CorrelationModel::fbm(0.5).unwrap(), 512),
    ] {
        let grid = Grid::uniform(0.0, 1.0, m).unwrap();
        group.throughput(Throughput::Elements((n * (m + 1)) as u64));
        group.bench_function(BenchmarkId::new(name, m), |b| {
            b.iter(|| sample_paths(&model, &grid, n, black_box(1)).unwrap())
        });
    }
    group.finish();
}

fn exceedance(c: &mut Criterion) {
    let grid = Grid::uniform(0.0, 1.0, 4096).unwrap();
    let trend: Vec<f64> = grid.points().iter().map(|t| -0.5 * t).collect();
    let mut group = c.benchmark_group("mc_sup_prob_nested");
    group.sample_size(10);
    group.throughput(Throughput::Elements(10_000 * 4097));
    group.bench_function("bridge_4096_x3", |b| {
        b.iter(|| {
            mc_sup_prob_nested(
                &CorrelationModel::BrownianBridge,
                &trend,
                1.5,
                &grid,
                3,
                10_000,
                black_box(1),
            )
            .unwrap()
        })
    });
    group.finish();
}

fn piterbarg(c: &mut Criterion) {
    let mut group = c.benchmark_group("piterbarg_estimate");
    group.sample_size(10);
    for estimator in [Estimator::Direct, Estimator::ShiftAveraged] {
        let spec = PiterbargSpec {
            alpha: 1.0,
            a: 1.0,
            trend: TrendFunction::Linear { c: 1.0 },
            start: 0.0,
            end: 8.0,
            grid_step: 1.0 / 256.0,
        };
        let budget = McBudget::new(5_000, 1).with_estimator(estimator);
        group.bench_function(format!("{estimator:?}"), |b| {
            b.iter(|| piterbarg_estimate(black_box(&spec), budget).unwrap())
        });
    }
    group.finish();
}

fn closed_forms(c: &mut Criterion) {
    c.bench_function("normal_tail", |b| b.iter(|| normal_tail(black_box(7.3))));
    c.bench_function("ruin_asymptotic", |b| {
        b.iter(|| ruin_asymptotic(black_box(4.0), 1.0, 1.0, 1.0, &ClosedForm).unwrap())
    });
}

criterion_group!(benches, path_sampling, exceedance, piterbarg, closed_forms);
criterion_main!(benches);
