use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use erasure_robust::erasure::{brute_force_extremes, extreme_ratios, sort_sample};
use erasure_robust::jl::{draw_projection, ProjectionSpec};
use erasure_robust::montecarlo::estimate_membership;
use erasure_robust::rip::{build_net, certify_strong_rip, RipLevels};
use erasure_robust::rng::Stream;
use erasure_robust::{DistortionBand, ErasureSpec, Normalization, TrialPlan};

fn gaussian(m: usize, seed: u64) -> Vec<f64> {
    let mut st = Stream::new(seed, 0);
    (0..m).map(|_| st.normal()).collect()
}

fn sorting_reduction(c: &mut Criterion) {
    let mut g = c.benchmark_group("extreme_ratios");
    for m in [100usize, 1_000, 10_000] {
        let y = gaussian(m, 1);
        let spec = ErasureSpec::new(0.1, m, Normalization::PerSurvivor).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &y, |b, y| {
            b.iter(|| extreme_ratios(&sort_sample(black_box(y)).unwrap(), &spec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("brute_force_extremes");
    for m in [8usize, 12, 16] {
        let y = gaussian(m, 2);
        let spec = ErasureSpec::with_budget(m / 4, m, Normalization::PerSurvivor).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &y, |b, y| {
            b.iter(|| brute_force_extremes(black_box(y), &spec).unwrap())
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let band = DistortionBand::symmetric(0.3).unwrap();
    let plan = TrialPlan::new(1_000, 1_000, 3, 1).unwrap();
    c.bench_function("estimate_membership m=1000 x1000", |b| {
        b.iter(|| estimate_membership(band, 0.05, Normalization::PerSurvivor, black_box(&plan)).unwrap())
    });
}

fn certification(c: &mut Criterion) {
    let a = draw_projection(&ProjectionSpec::new(300, 8, 4).unwrap());
    let net = build_net(2, 0.5).unwrap();
    c.bench_function("certify_strong_rip n=8 s=2 m=300", |b| {
        b.iter(|| certify_strong_rip(black_box(&a), 2, 0.2, RipLevels::Symmetric, 0.5, &net).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = sorting_reduction, monte_carlo, certification
}
criterion_main!(benches);
