use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use memd_bench::{gaussian_config, gaussian_grid, planted, planted_multiclass};
use memd_core::divergence::j_divergence;
use memd_core::maxent::{
    fit_exponential_halfline, fit_numeric, FeatureFunctionSpec, MomentVector, SupportSpec,
};
use memd_core::selection::{rank, RankingMethod};
use memd_core::Method;

fn marginals(c: &mut Criterion) {
    let spec = FeatureFunctionSpec::mean_and_second();
    let moments = MomentVector::new(vec![0.4, 0.2], 100);
    c.bench_function("fit_numeric/unit_interval_orders_1_2", |b| {
        b.iter(|| fit_numeric(black_box(&moments), &spec, &SupportSpec::UNIT, 1e-8, 100).unwrap())
    });
    let p = fit_exponential_halfline(&MomentVector::new(vec![1.0], 1), 0.0).unwrap();
    let q = fit_exponential_halfline(&MomentVector::new(vec![0.5], 1), 0.0).unwrap();
    c.bench_function("j_divergence/exponential", |b| {
        b.iter(|| j_divergence(black_box(&p), black_box(&q)).unwrap())
    });
}

fn grids(c: &mut Criterion) {
    let mut group = c.benchmark_group("grid");
    for features in [100, 1000] {
        let data = planted(250, features);
        group.bench_with_input(BenchmarkId::new("fit", features), &data, |b, data| {
            b.iter(|| gaussian_grid(data, false))
        });
        let grid = gaussian_grid(&data, false);
        group.bench_with_input(
            BenchmarkId::new("rank_binary_j", features),
            &grid,
            |b, g| b.iter(|| rank(g, RankingMethod::BinaryJ).unwrap()),
        );
    }
    let data = planted_multiclass(100, 500);
    let grid = gaussian_grid(&data, true);
    group.bench_function("rank_js_gm/4x500", |b| {
        b.iter(|| rank(&grid, RankingMethod::JsGm).unwrap())
    });
    group.bench_function("rank_one_vs_all_j/4x500", |b| {
        b.iter(|| rank(&grid, RankingMethod::OneVsAllJ).unwrap())
    });
    group.finish();
}

fn classify(c: &mut Criterion) {
    let data = planted(500, 200);
    let model = memd_core::fit(&data, &gaussian_config(Method::MeMdJ, Some(20))).unwrap();
    c.bench_function("predict/1000x200_k20", |b| {
        b.iter(|| model.accuracy(black_box(&data)))
    });
}

criterion_group!(benches, marginals, grids, classify);
criterion_main!(benches);
