use criterion::{black_box, criterion_group, criterion_main, Criterion};
use qqft::engine::NoiseModel;
use qqft::haldane::{bott_index, flat_haldane_model, DEFAULT_TIME_MS};
use qqft::poincare::{build_dispersion, greens_function, GreensRoute};
use qqft::{build_protocol_unitary, HaldaneParams};

fn flat_band(c: &mut Criterion) {
    let mut g = c.benchmark_group("flatband");
    g.sample_size(10);
    let model = flat_haldane_model(&HaldaneParams::default(), 16, DEFAULT_TIME_MS).unwrap();
    let noise = NoiseModel::new(2.5e-3, 3, 0).unwrap();
    g.bench_function("protocol_unitary_16x16", |b| b.iter(|| build_protocol_unitary(black_box(&model), &noise)));
    let u = build_protocol_unitary(&model, &noise).unwrap();
    g.bench_function("bott_16x16", |b| b.iter(|| bott_index(black_box(&u), model.time(), 2, 16, 1)));
    g.finish();
}

fn poincare(c: &mut Criterion) {
    let disp = build_dispersion(33, 2).unwrap();
    let noise = NoiseModel::new(1e-2, 3, 0).unwrap();
    c.bench_function("greens_33", |b| b.iter(|| greens_function(black_box(&disp), &noise, GreensRoute::Qqft)));
}

criterion_group!(benches, flat_band, poincare);
criterion_main!(benches);
