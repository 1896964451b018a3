use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use deconv_core::grid_signal::Convolver;
use deconv_core::{
    convolve_signal, discretize_kernel, inverse_operator, sample_function, ConvOperator, DeconvConfig, Kernel,
    Polynomial1D,
};

fn degree_50() -> Polynomial1D {
    let c: Vec<f64> = (0..=50).map(|k| ((k * 37 % 11) as f64 - 5.0) / 5.0 + 0.1).collect();
    Polynomial1D::from_f64(&c)
}

fn polynomial(c: &mut Criterion) {
    let p = degree_50();
    c.bench_function("operator_build_deg50", |b| {
        b.iter(|| ConvOperator::new(&Kernel::gaussian(), black_box(0.9), 50).unwrap())
    });
    let op = ConvOperator::new(&Kernel::gaussian(), 0.9, 50).unwrap();
    let q = op.convolve(&p).unwrap();
    c.bench_function("convolve_poly_deg50", |b| {
        b.iter(|| op.convolve(black_box(&p)).unwrap())
    });
    c.bench_function("invert_poly_deg50", |b| b.iter(|| op.invert(black_box(&q)).unwrap()));
}

fn signal(c: &mut Criterion) {
    let s = sample_function(|t| (5.0 * t).sin() + (3.0 * t).sin(), -6.0, 6.0, 2048).unwrap();
    let taps = discretize_kernel(&Kernel::gaussian(), 0.55, s.dt()).unwrap();
    let fft = Convolver::with_strategy(&taps, s.len(), true);
    let direct = Convolver::with_strategy(&taps, s.len(), false);
    c.bench_function("convolve_fft_2048", |b| b.iter(|| fft.apply(black_box(s.values()))));
    c.bench_function("convolve_direct_2048", |b| {
        b.iter(|| direct.apply(black_box(s.values())))
    });

    let g = convolve_signal(&s, &taps).unwrap();
    let cfg = DeconvConfig::new(&Kernel::gaussian(), 0.55, 90).unwrap();
    c.bench_function("inverse_operator_n90_2048", |b| {
        b.iter_batched(
            || g.clone(),
            |g| inverse_operator(&cfg, &g).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, polynomial, signal);
criterion_main!(benches);
