use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use twcc_core::channel_model::{simulate_observed, DeviceParams, ProtocolParams, SourceParams};
use twcc_core::ledger::EpsBudget;
use twcc_core::optimize::{optimize_point, OptimizerSettings};
use twcc_core::pairing_stats::{
    exact_wb_distribution, exact_wb_distribution_recursive, BallSetExact,
};
use twcc_core::pipeline::{evaluate, evaluate_stats, Pipeline, PipelineOptions};
use twcc_core::tail_bounds::{
    binom_tail_below, chernoff_lower_from_expected, BinomialSpec, FailureProb,
};

fn tails(c: &mut Criterion) {
    let mut g = c.benchmark_group("binomial_tail");
    for (m, p, x) in [
        (30u64, 0.3, 7u64),
        (1_000_000, 0.25, 248_000),
        (10_000_000, 0.01, 99_000),
    ] {
        let spec = BinomialSpec::new(m, p).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(m), &x, |b, &x| {
            b.iter(|| binom_tail_below(black_box(x), &spec))
        });
    }
    g.finish();

    let xi = FailureProb::new(1e-20).unwrap();
    c.bench_function("chernoff_lower", |b| {
        b.iter(|| chernoff_lower_from_expected(black_box(3.7e6), xi).unwrap())
    });
}

fn pairing(c: &mut Criterion) {
    let set = BallSetExact::new(77, 200).unwrap();
    c.bench_function("wb_closed_form_200", |b| {
        b.iter(|| exact_wb_distribution(black_box(&set)))
    });
    c.bench_function("wb_recursion_200", |b| {
        b.iter(|| exact_wb_distribution_recursive(black_box(&set)))
    });
}

fn pipelines(c: &mut Criterion) {
    let dev = DeviceParams::default();
    let budget = EpsBudget::default();
    let opts = PipelineOptions::default();
    let p = ProtocolParams::symmetric(1e12, 300.0, &SourceParams::default());
    c.bench_function("simulate_observed", |b| {
        b.iter(|| simulate_observed(&dev, black_box(&p)).unwrap())
    });

    let stats = simulate_observed(&dev, &p).unwrap();
    let mut g = c.benchmark_group("evaluate_stats");
    for pipeline in Pipeline::ALL {
        g.bench_function(pipeline.name(), |b| {
            b.iter(|| evaluate_stats(&dev, &p, &stats, black_box(pipeline), &budget, &opts))
        });
    }
    g.finish();

    c.bench_function("evaluate_twcc", |b| {
        b.iter(|| evaluate(&dev, black_box(&p), Pipeline::Twcc, &budget, &opts))
    });
}

fn optimizer(c: &mut Criterion) {
    let dev = DeviceParams::default();
    let settings = OptimizerSettings {
        restarts: 1,
        max_evaluations: 200,
        ..Default::default()
    };
    let mut g = c.benchmark_group("optimize_point");
    g.sample_size(10);
    g.bench_function("twcc_300km_200_evals", |b| {
        b.iter(|| {
            optimize_point(
                &dev,
                1e12,
                black_box(300.0),
                Pipeline::Twcc,
                &EpsBudget::default(),
                &PipelineOptions::default(),
                &SourceParams::default(),
                &settings,
                0,
            )
        })
    });
    g.finish();
}

criterion_group!(benches, tails, pairing, pipelines, optimizer);
criterion_main!(benches);
