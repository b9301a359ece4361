use std::hint::black_box;

use cfrmed::effects::{pairwise_matrix_with, MatrixKind, UndefinedBandPolicy};
use cfrmed::ingest::load_bundled;
use cfrmed::scm::{oracle_suite, replicate_study, ReplicateConfig};
use cfrmed::stats::{pearson_with, PMethod};
use cfrmed::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn matrices(c: &mut Criterion) {
    let entry = load_bundled("countries_latest").unwrap();
    let cohorts = entry.file.content.cohorts();
    let mut g = c.benchmark_group("pairwise_matrix");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("nie_12x12", name), |b| {
            b.iter(|| pairwise_matrix_with(black_box(cohorts), MatrixKind::Nie, UndefinedBandPolicy::Zero, exec).unwrap())
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_suite");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("1000_models_k9", name), |b| b.iter(|| oracle_suite(1000, 9, black_box(1), exec).unwrap()));
    }
    g.finish();
}

fn replicates(c: &mut Criterion) {
    let config = ReplicateConfig { models: 10, replicates: 50, ..ReplicateConfig::default() };
    let mut g = c.benchmark_group("replicate_study");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("10_models_50_reps", name), |b| b.iter(|| replicate_study(black_box(config), exec).unwrap()));
    }
    g.finish();
}

fn permutation(c: &mut Criterion) {
    let entry = load_bundled("countries_latest").unwrap();
    let cohorts = entry.file.content.cohorts();
    let nde = pairwise_matrix_with(cohorts, MatrixKind::Nde, UndefinedBandPolicy::Zero, Execution::Sequential).unwrap();
    let nie = pairwise_matrix_with(cohorts, MatrixKind::Nie, UndefinedBandPolicy::Zero, Execution::Sequential).unwrap();
    let (x, y) = (nde.off_diagonal(), nie.align_to(&nde).off_diagonal());
    let p = PMethod::Permutation { seed: 7, reps: 20_000 };
    let mut g = c.benchmark_group("permutation_test");
    g.sample_size(20);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::new("pearson_132_20k", name), |b| b.iter(|| pearson_with(black_box(&x), &y, p, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, matrices, oracle, replicates, permutation);
criterion_main!(benches);
