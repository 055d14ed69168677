use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use advish_core::pipeline::fixtures;
use advish_core::stats::{
    dist::studentized_range_cdf, evaluate_accuracy_matrix, friedman, nemenyi, rank_rows,
    wilcoxon_one_tailed, PairedSample,
};

fn paired_sample(n: usize, seed: u64) -> PairedSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let before: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.0)).collect();
    let after: Vec<f64> = before.iter().map(|b| b - rng.gen_range(-0.1..0.3)).collect();
    PairedSample::new(before, after).unwrap()
}

fn bench_wilcoxon(c: &mut Criterion) {
    let mut group = c.benchmark_group("wilcoxon_exact");
    for n in [10, 16, 20] {
        let sample = paired_sample(n, n as u64);
        group.bench_function(format!("n{n}"), |b| {
            b.iter(|| wilcoxon_one_tailed(black_box(&sample)).unwrap())
        });
    }
    group.finish();
}

fn bench_studentized_range(c: &mut Criterion) {
    c.bench_function("studentized_range_cdf_k4", |b| {
        b.iter(|| studentized_range_cdf(black_box(3.633), black_box(4)))
    });
}

fn bench_rank_pipeline(c: &mut Criterion) {
    let values = fixtures::adversarial_accuracy_matrix();
    c.bench_function("rank_friedman_nemenyi_10x4", |b| {
        b.iter(|| {
            let rm = rank_rows(black_box(&values)).unwrap();
            let f = friedman(&rm).unwrap();
            let n = nemenyi(&rm).unwrap();
            (f, n)
        })
    });
    c.bench_function("evaluate_reference_matrix", |b| {
        let matrix = fixtures::reference_matrix();
        b.iter(|| evaluate_accuracy_matrix(black_box(&matrix)).unwrap())
    });
}

criterion_group!(benches, bench_wilcoxon, bench_studentized_range, bench_rank_pipeline);
criterion_main!(benches);
