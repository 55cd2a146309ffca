use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::Rng;
use trisre::coeff_model::{solve_tail_index, MomentBudget};
use trisre::goldie::ws;
use trisre::sre_engine::stationary_draws;
use trisre::tail_stats::{default_k, hill};
use trisre::verify::configs;
use trisre::{PositiveDistribution, SimConfig, StreamKey};

fn solver(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_tail_index");
    let cases = [
        ("lognormal", PositiveDistribution::LogNormal { mu: -0.5, sigma: 1.0 }),
        ("chisq_affine", PositiveDistribution::ChiSqAffine { a: 0.5, b: 0.5 }),
        ("scaled_uniform_pow", PositiveDistribution::ScaledUniformPow { scale: 2.0, power: 1.0 }),
    ];
    for (name, dist) in cases {
        g.bench_function(name, |b| b.iter(|| solve_tail_index(black_box(&dist), 1e-12, MomentBudget::Analytic).unwrap()));
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let law = configs::second_dominant();
    let mut g = c.benchmark_group("stationary_draws");
    g.sample_size(10);
    for n in [100_000usize, 1_000_000] {
        let cfg = SimConfig::for_law(&law, n, 1, 1).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| stationary_draws(&law, cfg, StreamKey::new(1)).unwrap())
        });
    }
    g.finish();
}

fn tail(c: &mut Criterion) {
    let mut rng = StreamKey::new(2).rng(0);
    let sample: Vec<f64> = (0..1_000_000).map(|_| rng.random::<f64>().powf(-1.0 / 1.5)).collect();
    c.bench_function("hill_1e6", |b| b.iter(|| hill(black_box(&sample), default_k(sample.len())).unwrap()));
}

fn ws_estimator(c: &mut Criterion) {
    let law = configs::second_dominant();
    let mut g = c.benchmark_group("ws");
    g.sample_size(10);
    for s in [8usize, 64] {
        g.bench_with_input(BenchmarkId::from_parameter(s), &s, |b, &s| {
            b.iter(|| ws(&law, 1.5, s, 100_000, StreamKey::new(3)).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, solver, simulation, tail, ws_estimator);
criterion_main!(benches);
