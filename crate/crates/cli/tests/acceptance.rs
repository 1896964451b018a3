//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use deconv_core::grid_signal::Taps;
use deconv_core::polynomial::real::{binomial_row, to_f64, Real};
use deconv_core::{
    convolve_signal, dft, discretize_kernel, inverse_operator, sample_function, ConvOperator, DeconvConfig, Kernel,
    MultiPolynomial, Polynomial1D, SeparableConv,
};
use deconv_tool::{run_fig2, run_fig3, ExperimentId, ExperimentSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

/// Coefficients uniform in [-1, 1] with the leading one kept away from zero.
fn random_poly(rng: &mut ChaCha8Rng, degree: usize) -> Polynomial1D {
    let mut c: Vec<f64> = (0..degree).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lead: f64 = rng.random_range(0.5..1.0);
    c.push(if rng.random_bool(0.5) { lead } else { -lead });
    Polynomial1D::from_f64(&c)
}

fn l2(p: &Polynomial1D) -> f64 {
    p.to_f64_vec().iter().fold(0.0, |acc, c| acc + c * c).sqrt()
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let start = Instant::now();
    let ops: Vec<ConvOperator> = [Kernel::gaussian(), Kernel::bump()]
        .iter()
        .flat_map(|k| [0.5, 0.9, 1.5].map(|eps| ConvOperator::new(k, eps, 50).unwrap()))
        .collect();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let op = &ops[i % ops.len()];
        let degree = rng.random_range(2..=50);
        let p = random_poly(&mut rng, degree);
        let back = op.invert(&op.convolve(&p).unwrap()).unwrap();
        worst = worst.max(back.relative_error(&p));
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 1e-8 && elapsed < Duration::from_secs(5),
        format!(
            "max relative error {worst:.2e} (< 1e-8), {:.2} s (< 5 s)",
            secs(elapsed)
        ),
    )
}

fn quadratic_closed_form() -> Outcome {
    let x2 = Polynomial1D::monomial(2, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_forward = 0.0f64;
    let mut worst_inverse = 0.0f64;
    for eps in [0.3, 0.5, 0.9, 1.5, 2.5] {
        let op = ConvOperator::new(&Kernel::gaussian(), eps, 3).unwrap();
        let want = Polynomial1D::from_f64(&[2.0 * eps * eps, 0.0, 1.0]);
        worst_forward = worst_forward.max(op.convolve(&x2).unwrap().relative_error(&want));
        for degree in [2, 3] {
            let q = random_poly(&mut rng, degree);
            let formula = &(&q * 2.0) - &op.convolve(&q).unwrap();
            worst_inverse = worst_inverse.max(op.invert(&q).unwrap().relative_error(&formula));
        }
    }
    outcome(
        worst_forward < 1e-10 && worst_inverse < 1e-10,
        format!("x^2 -> x^2 + 2 eps^2 error {worst_forward:.2e}, inverse vs 2q - Tq {worst_inverse:.2e} (< 1e-10)"),
    )
}

fn nilpotency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let n = rng.random_range(1..=40);
        let p = random_poly(&mut rng, n);
        let kernel = if i % 2 == 0 { Kernel::gaussian() } else { Kernel::bump() };
        let op = ConvOperator::new(&kernel, rng.random_range(0.4..1.5), n).unwrap();
        let mut r = p.clone();
        for _ in 0..n / 2 + 1 {
            r = op.complement(&r).unwrap();
        }
        worst = worst.max(l2(&r) / l2(&p));
    }
    outcome(
        worst < 1e-9,
        format!("max |(id - T)^(n/2+1) p| / |p| = {worst:.2e} (< 1e-9)"),
    )
}

fn iterate_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut folding = 0.0f64;
    let mut sides = 0.0f64;
    for trial in 0..5 {
        let p = random_poly(&mut rng, 12);
        let kernel = if trial % 2 == 0 {
            Kernel::gaussian()
        } else {
            Kernel::bump()
        };
        let op = ConvOperator::new(&kernel, rng.random_range(0.5..1.2), 12).unwrap();
        let side: Vec<Polynomial1D> = (0..=6).map(|j| op.side_polynomial(&p, j).unwrap()).collect();
        let iter: Vec<Polynomial1D> = (0..=6).map(|k| op.iterate(&p, k).unwrap()).collect();
        for k in 0..=6 {
            let binom = binomial_row(k);
            let folded = (0..=k).fold(Polynomial1D::zero(), |acc, j| &acc + &(&side[j] * to_f64(&binom[j])));
            folding = folding.max(folded.relative_error(&iter[k]));

            let expanded = (0..=k).fold(Polynomial1D::zero(), |acc, i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                &acc + &(&iter[k - i] * (sign * to_f64(&binom[i])))
            });
            let scale = p.max_abs().max(side[k].max_abs());
            sides = sides.max((&expanded - &side[k]).max_abs() / scale);
        }
    }
    outcome(
        folding < 1e-9 && sides < 1e-9,
        format!("folding {folding:.2e}, side polynomials {sides:.2e} (< 1e-9)"),
    )
}

/// Powers `T^k g`, k = 0..=n, in 160-bit arithmetic with the same taps and
/// zero-padded cropping as the implementation.
fn mp_powers(g: &[f64], taps: &Taps, n: usize) -> Vec<Vec<Real>> {
    const BITS: u32 = 160;
    let h: Vec<Real> = taps.values.iter().map(|&v| Real::with_val(BITS, v)).collect();
    let c = taps.center as isize;
    let len = g.len() as isize;
    let mut powers = vec![g.iter().map(|&v| Real::with_val(BITS, v)).collect::<Vec<_>>()];
    for _ in 0..n {
        let x = powers.last().unwrap();
        let next = (0..len)
            .map(|i| {
                let mut acc = Real::new(BITS);
                for (k, hk) in h.iter().enumerate() {
                    let j = i - k as isize + c;
                    if (0..len).contains(&j) {
                        acc += hk * &x[j as usize];
                    }
                }
                acc
            })
            .collect();
        powers.push(next);
    }
    powers
}

/// `sum_{k=0}^{n} (-1)^k C(n+1, k+1) T^k g`.
fn binomial_sum(powers: &[Vec<Real>], n: usize) -> Vec<f64> {
    let binom = binomial_row(n + 1);
    (0..powers[0].len())
        .map(|i| {
            let mut acc = Real::new(160);
            for k in 0..=n {
                let term = Real::with_val(160, &binom[k + 1] * &powers[k][i]);
                if k % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            to_f64(&acc)
        })
        .collect()
}

fn recursion_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut spent = Duration::ZERO;
    for eps in [0.2, 0.3] {
        let tones: Vec<(f64, f64, f64)> = (0..4)
            .map(|_| {
                (
                    rng.random_range(-1.0..1.0),
                    rng.random_range(0.1..4.0),
                    rng.random_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let g = sample_function(
            |t| tones.iter().map(|(a, w, ph)| a * (w * t + ph).sin()).sum(),
            -10.0,
            10.0,
            1024,
        )
        .unwrap();
        let taps = discretize_kernel(&Kernel::gaussian(), eps, g.dt()).unwrap();
        let powers = mp_powers(g.values(), &taps, 30);
        for n in 1..=30 {
            let oracle = binomial_sum(&powers, n);
            let cfg = DeconvConfig::new(&Kernel::gaussian(), eps, n).unwrap();
            let start = Instant::now();
            let report = inverse_operator(&cfg, &g).unwrap();
            spent += start.elapsed();
            for (a, b) in report.reconstructed.values().iter().zip(&oracle) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(
        worst < 1e-9 && spent < Duration::from_secs(2),
        format!(
            "max |recursion - binomial form| {worst:.2e} (< 1e-9), recursion time {:.2} s (< 2 s)",
            secs(spent)
        ),
    )
}

fn fig2_reconstruction() -> Outcome {
    let start = Instant::now();
    let out = run_fig2(&ExperimentSpec::defaults(ExperimentId::Fig2)).unwrap();
    let elapsed = start.elapsed();
    let err = out.report.interior_error.unwrap();
    let peak = out.peak_errors.iter().cloned().fold(0.0, f64::max);
    outcome(
        err < 0.05 && peak < 0.10 && elapsed < Duration::from_secs(10),
        format!(
            "interior error {err:.3} (< 0.05), peak magnitude errors {:?} (< 0.10), {:.2} s (< 10 s)",
            out.peak_errors.iter().map(|e| format!("{e:.3}")).collect::<Vec<_>>(),
            secs(elapsed)
        ),
    )
}

fn spectral_contract() -> Outcome {
    let n = 4096;
    let dt = 80.0 / n as f64;
    let f = sample_function(
        |t| (-t * t / 8.0).exp() * ((3.0 * t).cos() + 0.5 * (5.0 * t).sin()),
        -40.0,
        40.0 - dt,
        n,
    )
    .unwrap();
    let cfg = DeconvConfig::new(&Kernel::gaussian(), 0.55, 90).unwrap();
    let taps = discretize_kernel(&Kernel::gaussian(), 0.55, f.dt()).unwrap();
    let g = convolve_signal(&f, &taps).unwrap();
    let x = dft(&inverse_operator(&cfg, &g).unwrap().reconstructed);
    let fs = dft(&f);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for k in 0..n {
        if (fs.bins[k] * f.dt()).norm() > 1e-6 {
            let ratio = x.bins[k] / fs.bins[k];
            let factor = cfg.spectral_factor(fs.signed_frequency(k).abs()).unwrap();
            worst = worst.max((ratio - factor).norm());
            checked += 1;
        }
    }
    outcome(
        worst < 5e-3,
        format!("max |X/F - factor| {worst:.2e} over {checked} bins (< 5e-3)"),
    )
}

fn fig3_pipeline() -> Outcome {
    let out = run_fig3(&ExperimentSpec::defaults(ExperimentId::Fig3)).unwrap();
    let ratios: Vec<f64> = out.peaks.iter().map(|p| p.ratio).collect();
    let filtered = out.report.filter.as_ref().and_then(|s| s.interior_error).unwrap();
    let unfiltered = out.report.interior_error.unwrap();
    outcome(
        ratios.iter().all(|&r| r >= 3.0) && filtered < unfiltered,
        format!(
            "peak/floor at omega 3, 5: {:.2}, {:.2} (>= 3); interior error filtered {filtered:.3} < unfiltered {unfiltered:.3}",
            ratios[0], ratios[1]
        ),
    )
}

fn two_variables() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut round = 0.0f64;
    for _ in 0..20 {
        let degree = rng.random_range(1..=6u32);
        let mut terms = Vec::new();
        for a in 0..=degree {
            for b in 0..=degree - a {
                terms.push((vec![a, b], rng.random_range(-1.0..1.0)));
            }
        }
        let p = MultiPolynomial::from_terms(2, terms).unwrap();
        let op = SeparableConv::new(&Kernel::gaussian(), rng.random_range(0.3..1.5), 6).unwrap();
        let back = op.invert(&op.convolve(&p).unwrap()).unwrap();
        round = round.max(back.relative_error(&p).unwrap());
    }
    let mut affine = 0.0f64;
    for eps in [0.2, 0.7, 1.9] {
        let op = SeparableConv::new(&Kernel::gaussian(), eps, 1).unwrap();
        let p = MultiPolynomial::from_terms(2, [(vec![0, 0], 1.5), (vec![1, 0], -0.25), (vec![0, 1], 3.0)]).unwrap();
        affine = affine.max(op.convolve(&p).unwrap().relative_error(&p).unwrap());
    }
    outcome(
        round < 1e-9 && affine < 1e-12,
        format!("round trip {round:.2e} (< 1e-9), affine invariance {affine:.2e} (< 1e-12)"),
    )
}

fn run_cli_fig3(dir: &Path) {
    let status = Command::new(env!("CARGO_BIN_EXE_deconv"))
        .args(["experiment", "fig3", "--out-dir"])
        .arg(dir)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_cli_fig3(a.path());
    run_cli_fig3(b.path());
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    let mismatched: Vec<String> = names
        .iter()
        .filter(|n| std::fs::read(a.path().join(n)).ok() != std::fs::read(b.path().join(n)).ok())
        .map(|n| n.to_string_lossy().into_owned())
        .collect();
    outcome(
        !names.is_empty() && mismatched.is_empty(),
        format!("{} files compared, mismatched: {mismatched:?}", names.len()),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("polynomial round trip", round_trip),
        ("quadratic closed form", quadratic_closed_form),
        ("nilpotency", nilpotency),
        ("iterate and side-polynomial identities", iterate_identities),
        ("recursion equals binomial form", recursion_equivalence),
        ("fig2 reconstruction", fig2_reconstruction),
        ("spectral factor contract", spectral_contract),
        ("fig3 noisy pipeline", fig3_pipeline),
        ("two-variable sanity", two_variables),
        ("fig3 determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let result = run();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {:>2} {name}: {}", i + 1, result.detail);
        failed += usize::from(!result.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
