use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ltfnoise_core::exact::{p_exact, Engine, ExactConfig};
use ltfnoise_core::montecarlo::{estimate, estimate_bitparallel, DecisionProtocol, McConfig};
use ltfnoise_core::search::search_exhaustive;
use ltfnoise_core::{NoiseParams, ThresholdFunction};

fn exact_engines(c: &mut Criterion) {
    let noise = NoiseParams::new(0.1).unwrap();
    let rational = NoiseParams::rational(1, 10).unwrap();
    let config = ExactConfig::default();
    let mut group = c.benchmark_group("exact");
    for n in [8usize, 12] {
        let f = ThresholdFunction::simple_majority(n, 0.0).unwrap();
        group.bench_with_input(BenchmarkId::new("enum", n), &f, |b, f| {
            b.iter(|| p_exact(f, &noise, Engine::Enum, &config).unwrap())
        });
    }
    for n in [101usize, 1001] {
        let f = ThresholdFunction::simple_majority(n, 0.0).unwrap();
        group.bench_with_input(BenchmarkId::new("dp", n), &f, |b, f| {
            b.iter(|| p_exact(f, &noise, Engine::Dp, &config).unwrap())
        });
    }
    let f = ThresholdFunction::simple_majority(31, 0.0).unwrap();
    group.bench_function("dp-rational/31", |b| {
        b.iter(|| p_exact(&f, &rational, Engine::Dp, &config).unwrap())
    });
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    const N: usize = 1001;
    const SAMPLES: u64 = 2_000;
    let noise = NoiseParams::new(0.1).unwrap();
    let f = ThresholdFunction::simple_majority(N, 0.0).unwrap();
    let per_coordinate = McConfig::default();
    let shared = McConfig {
        protocol: DecisionProtocol::SharedWords,
        ..McConfig::default()
    };
    let mut group = c.benchmark_group("mc-1001");
    group.throughput(Throughput::Elements(SAMPLES));
    group.sample_size(20);
    group.bench_function("general", |b| {
        b.iter(|| estimate(&f, &noise, SAMPLES, black_box(7), &per_coordinate).unwrap())
    });
    group.bench_function("general-shared-words", |b| {
        b.iter(|| estimate(&f, &noise, SAMPLES, black_box(7), &shared).unwrap())
    });
    group.bench_function("bitparallel", |b| {
        b.iter(|| estimate_bitparallel(N, 0.0, &noise, SAMPLES, black_box(7), &shared).unwrap())
    });
    group.finish();
}

fn search(c: &mut Criterion) {
    let noise = NoiseParams::new(0.1).unwrap();
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    group.bench_function("exhaustive/n5-cap3", |b| {
        b.iter(|| search_exhaustive(5, &noise, 3, false).unwrap())
    });
    group.finish();
}

criterion_group!(benches, exact_engines, monte_carlo, search);
criterion_main!(benches);
