//! Replicate-level parallelism vs an explicit sequential loop, plus the
//! dense-table kernels. With default features the library paths run on
//! rayon; rebuild with --no-default-features to bench the sequential
//! fallback through the same entry points.

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use std::hint::black_box;

use fieldmax::dsequences::DSequence;
use fieldmax::fieldgen::{generate, FieldModel, Margin};
use fieldmax::lattice::{LatticeTable, MultiIndex};
use fieldmax::maximal::{estimate_tail_prob, replicate_max_stat};

fn mi(coords: &[usize]) -> MultiIndex {
    MultiIndex::new(coords.to_vec()).unwrap()
}

fn bench_tail_prob(c: &mut Criterion) {
    let model = FieldModel::iid(Margin::Rademacher, 42);
    let n = mi(&[64, 64]);
    let reps = 512;

    let mut group = c.benchmark_group("tail_prob_512reps_64x64");
    group.sample_size(10);
    group.bench_function("library (rayon under default features)", |b| {
        b.iter(|| {
            estimate_tail_prob(black_box(&model), &n, 32.0, None, reps, 7).unwrap()
        })
    });
    group.bench_function("explicit sequential loop", |b| {
        b.iter(|| {
            let eff = model.with_seed(7);
            let hits = (0..reps)
                .filter(|&rep| replicate_max_stat(&eff, &n, None, rep).unwrap() >= 32.0)
                .count();
            black_box(hits)
        })
    });
    group.finish();
}

fn bench_prefix_sums(c: &mut Criterion) {
    let model = FieldModel::iid(Margin::Normal { mu: 0.0, sigma: 1.0 }, 1);
    let x = generate(&model, &mi(&[512, 512]), 0).unwrap();
    c.bench_function("prefix_sums_512x512", |b| {
        b.iter_batched(
            || x.clone(),
            |t: LatticeTable| t.prefix_sums().unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn bench_running_max(c: &mut Criterion) {
    let model = FieldModel::iid(Margin::Normal { mu: 0.0, sigma: 1.0 }, 1);
    let s = generate(&model, &mi(&[512, 512]), 0)
        .unwrap()
        .prefix_sums()
        .unwrap();
    let w = DSequence::power(2, -1.0);
    c.bench_function("running_weighted_max_512x512", |b| {
        b.iter(|| {
            s.running_weighted_max(|coords| w.eval_at(black_box(coords)))
                .unwrap()
        })
    });
}

criterion_group!(benches, bench_tail_prob, bench_prefix_sums, bench_running_max);
criterion_main!(benches);
