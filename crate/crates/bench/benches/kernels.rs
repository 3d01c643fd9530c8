use std::hint::black_box;

use basketsim_core::borrowing::{geb_weights, jsd_similarity, peb_weight};
use basketsim_core::{log_beta, prob_exceed, BasketData, BetaParams, PriorSpec};
use criterion::{criterion_group, criterion_main, Criterion};

fn special_functions(c: &mut Criterion) {
    c.bench_function("log_beta", |b| b.iter(|| log_beta(black_box(8.15), black_box(11.85))));
    let post = BetaParams::new(8.15, 11.85).unwrap();
    c.bench_function("prob_exceed", |b| {
        b.iter(|| prob_exceed(black_box(&post), black_box(0.15)))
    });
}

fn similarity(c: &mut Criterion) {
    let prior = PriorSpec::new(0.5, 0.5).unwrap();
    c.bench_function("peb_weight", |b| {
        b.iter(|| peb_weight(black_box(9), 25, black_box(13), 25, prior))
    });
    let f = BetaParams::new(8.5, 17.5).unwrap();
    let g = BetaParams::new(13.5, 12.5).unwrap();
    c.bench_function("jsd_similarity", |b| {
        b.iter(|| jsd_similarity(black_box(&f), black_box(&g)))
    });
    let data = BasketData::all_active(vec![2, 9, 11, 13, 20], vec![25; 5]).unwrap();
    let priors = PriorSpec::shared(0.5, 0.5, 5).unwrap();
    c.bench_function("geb_weights_5", |b| {
        b.iter(|| geb_weights(black_box(1), &data, &priors))
    });
}

criterion_group!(benches, special_functions, similarity);
criterion_main!(benches);
