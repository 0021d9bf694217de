use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use srf_bench::{batch, matrix, model, sequence, sinogram, LAMBDA_REL};
use srf_core::image::resample_bilinear;
use srf_core::mahalanobis::mahalanobis_row;
use srf_core::radon::radon_transform;
use srf_core::{MahalanobisMatrix, SrfConfig};
use std::hint::black_box;

fn mahalanobis(c: &mut Criterion) {
    let seq = sequence(60);
    let frame = &seq.frames()[30];
    c.bench_function("mahalanobis_row", |b| {
        b.iter(|| mahalanobis_row(black_box(frame), LAMBDA_REL))
    });
    c.bench_function("mahalanobis_sequence_60", |b| {
        b.iter(|| MahalanobisMatrix::from_sequence(black_box(&seq), LAMBDA_REL))
    });
}

fn radon(c: &mut Criterion) {
    let config = SrfConfig::default();
    let m = matrix(60);
    let img = resample_bilinear(&m.to_image().expect("non-empty"), config.resample_h, config.resample_w);
    c.bench_function("radon_64x64_to_64x90", |b| {
        b.iter(|| {
            radon_transform(
                black_box(&img),
                config.n_rho,
                config.n_theta,
                config.effective_samples_per_ray(),
            )
        })
    });
    let mut group = c.benchmark_group("srf");
    for frames in [10, 60, 200] {
        let m = matrix(frames);
        group.bench_with_input(BenchmarkId::from_parameter(frames), &m, |b, m| {
            b.iter(|| srf_core::srf(black_box(m), &config))
        });
    }
    group.finish();
}

fn cnn(c: &mut Criterion) {
    let config = SrfConfig::default();
    let s = sinogram(60, &config);
    let net = model(&config, 10);
    c.bench_function("predict_one", |b| b.iter(|| net.predict(black_box(&s))));
    let x = batch(&s, 16);
    let labels: Vec<usize> = (0..16).map(|i| i % 10).collect();
    c.bench_function("loss_and_gradients_batch16", |b| {
        b.iter(|| net.loss_and_gradients(black_box(&x), &labels))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = mahalanobis, radon, cnn
}
criterion_main!(benches);
