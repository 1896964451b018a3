//! Deconvolution of sampled signals by the truncated inverse series.
//!
//! `x_n = sum_{k=0}^{n} (id - T)^k g`, evaluated as the fixed-point
//! recursion `x_0 = g`, `x_{m+1} = x_m + (g - T x_m)`. The equivalent
//! alternating binomial form has coefficients near 1e26 at n = 90 and is
//! useless in f64; the recursion never forms them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid_signal::{convolve_signal, dft, discretize_kernel, Convolver, GridSignal, Spectrum, Taps};
use crate::kernel::{AdmissibilityReport, Kernel};

pub const DEFAULT_EDGE_MARGIN: f64 = 0.1;

/// Consecutive growing updates that trigger the optional early stop.
pub const AUTO_STOP_PATIENCE: usize = 3;

/// Half-width used for the sinc filter when none is given.
pub const DEFAULT_SINC_HALF_WIDTH: f64 = 8.0;

const ADMISSIBILITY_GRID: usize = 1025;

fn serialize_family<S: Serializer>(kernel: &Kernel, s: S) -> std::result::Result<S::Ok, S::Error> {
    kernel.family().serialize(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct DeconvConfig {
    #[serde(serialize_with = "serialize_family")]
    pub kernel: Kernel,
    pub epsilon: f64,
    pub order: usize,
    /// Fraction of samples dropped from each end in error metrics.
    pub edge_margin: f64,
    /// Check `0 < phi_eps^ < 2` up to Nyquist and warn if it fails.
    pub admissibility_check: bool,
    /// Stop once the interior update norm grows for [`AUTO_STOP_PATIENCE`] iterations in a row.
    pub auto_stop: bool,
}

impl DeconvConfig {
    pub fn new(kernel: &Kernel, epsilon: f64, order: usize) -> Result<Self> {
        let cfg = DeconvConfig {
            kernel: kernel.clone(),
            epsilon,
            order,
            edge_margin: DEFAULT_EDGE_MARGIN,
            admissibility_check: true,
            auto_stop: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.order < 1 {
            return Err(Error::invalid("order must be at least 1"));
        }
        if !(0.0..0.5).contains(&self.edge_margin) {
            return Err(Error::invalid(format!(
                "edge margin must lie in [0, 0.5), got {}",
                self.edge_margin
            )));
        }
        Ok(())
    }

    /// `1 - (1 - phi_eps^(xi))^(n+1)`, the response of deconvolution after convolution.
    pub fn spectral_factor(&self, xi: f64) -> Result<f64> {
        let phi = self.kernel.fourier(self.epsilon, xi)?;
        Ok(factor_from_transform(phi, self.order))
    }
}

fn factor_from_transform(phi: f64, order: usize) -> f64 {
    let q = 1.0 - phi;
    if q > 0.0 && q < 1.0 {
        // Accurate when phi is tiny and (n+1) phi is not.
        -((order + 1) as f64 * (-phi).ln_1p()).exp_m1()
    } else {
        1.0 - q.powi(i32::try_from(order + 1).unwrap_or(i32::MAX))
    }
}

pub fn spectral_factor(cfg: &DeconvConfig, xi: f64) -> Result<f64> {
    cfg.spectral_factor(xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FactorSample {
    /// Physical frequency.
    pub xi: f64,
    pub transform: f64,
    pub factor: f64,
}

/// Output of the low-pass stage of [`recover_with_filter`].
#[derive(Debug, Clone, Serialize)]
pub struct FilterStage {
    #[serde(skip)]
    pub filtered: GridSignal,
    #[serde(skip)]
    pub spectrum_before: Spectrum,
    #[serde(skip)]
    pub spectrum_after: Spectrum,
    pub taps: usize,
    pub interior_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DeconvReport {
    pub config: DeconvConfig,
    #[serde(skip)]
    pub reconstructed: GridSignal,
    /// `||g - T x_m||_2` for `m = 0, ..., order_used`.
    pub residual_norms: Vec<f64>,
    /// Factor samples at the non-negative DFT bin frequencies.
    #[serde(skip)]
    pub spectral_factor: Vec<FactorSample>,
    /// Interior relative L2 error against a reference, if one was given.
    pub interior_error: Option<f64>,
    pub order_used: usize,
    pub kernel_taps: usize,
    pub admissibility: Option<AdmissibilityReport>,
    pub warnings: Vec<String>,
    pub filter: Option<FilterStage>,
}

impl DeconvReport {
    /// Fills in interior errors of the reconstruction (and of the filtered
    /// signal, if present) against `reference`.
    pub fn with_reference(mut self, reference: &GridSignal) -> Result<Self> {
        let margin = self.config.edge_margin;
        self.interior_error = Some(self.reconstructed.interior_relative_error(reference, margin)?);
        if let Some(stage) = &mut self.filter {
            stage.interior_error = Some(stage.filtered.interior_relative_error(reference, margin)?);
        }
        Ok(self)
    }

    /// The filtered signal when a filter ran, the reconstruction otherwise.
    pub fn output(&self) -> &GridSignal {
        self.filter.as_ref().map_or(&self.reconstructed, |s| &s.filtered)
    }
}

fn admissibility(cfg: &DeconvConfig, dt: f64, warnings: &mut Vec<String>) -> Option<AdmissibilityReport> {
    if !cfg.admissibility_check {
        return None;
    }
    let nyquist = 0.5 / dt;
    match cfg.kernel.check_admissible(cfg.epsilon, nyquist, ADMISSIBILITY_GRID) {
        Ok(report) => {
            if !report.passes {
                let first = report.violations.first().copied().unwrap_or(f64::NAN);
                warnings.push(format!(
                    "kernel transform leaves (0, 2) below Nyquist (first at xi = {first:.4}); \
                     those frequencies are not recovered"
                ));
            }
            Some(report)
        }
        Err(e) => {
            warnings.push(format!("admissibility not checked: {e}"));
            None
        }
    }
}

fn factor_samples(cfg: &DeconvConfig, signal: &GridSignal) -> Vec<FactorSample> {
    let n = signal.len();
    let df = 1.0 / (n as f64 * signal.dt());
    (0..=n / 2)
        .filter_map(|k| {
            let xi = k as f64 * df;
            let transform = cfg.kernel.fourier(cfg.epsilon, xi).ok()?;
            Some(FactorSample {
                xi,
                transform,
                factor: factor_from_transform(transform, cfg.order),
            })
        })
        .collect()
}

/// Applies the truncated inverse of order `cfg.order` to `g`.
///
/// The kernel is sampled on `g`'s grid. One convolution per iteration plus
/// one for the final residual.
pub fn inverse_operator(cfg: &DeconvConfig, g: &GridSignal) -> Result<DeconvReport> {
    cfg.validate()?;
    let taps = discretize_kernel(&cfg.kernel, cfg.epsilon, g.dt())?;
    let mut warnings = Vec::new();
    let admissibility = admissibility(cfg, g.dt(), &mut warnings);

    let conv = Convolver::new(&taps, g.len());
    let interior = g.interior(cfg.edge_margin);
    let dt = g.dt();
    let gv = g.values();
    let mut x = gv.to_vec();
    let mut residual_norms = Vec::with_capacity(cfg.order + 1);
    let mut order_used = cfg.order;
    let mut previous_update = f64::INFINITY;
    let mut growing = 0;

    for m in 0..=cfg.order {
        let tx = conv.apply(&x);
        let update: Vec<f64> = gv.iter().zip(&tx).map(|(a, b)| a - b).collect();
        let norm = (update.iter().map(|u| u * u).sum::<f64>() * dt).sqrt();
        if !norm.is_finite() {
            return Err(Error::Divergence { iteration: m });
        }
        residual_norms.push(norm);
        if m == cfg.order {
            break;
        }
        if cfg.auto_stop {
            let inner: f64 = update[interior.clone()].iter().map(|u| u * u).sum();
            growing = if inner > previous_update { growing + 1 } else { 0 };
            previous_update = inner;
            if growing >= AUTO_STOP_PATIENCE {
                order_used = m;
                warnings.push(format!(
                    "stopped at order {m}: update norm grew {growing} times in a row"
                ));
                break;
            }
        }
        for (xi, u) in x.iter_mut().zip(&update) {
            *xi += u;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration: m + 1 });
        }
    }

    Ok(DeconvReport {
        config: cfg.clone(),
        reconstructed: g.with_values(x)?,
        residual_norms,
        spectral_factor: factor_samples(cfg, g),
        interior_error: None,
        order_used,
        kernel_taps: taps.len(),
        admissibility,
        warnings,
        filter: None,
    })
}

/// Deconvolves `noisy`, then convolves the result with `filter`.
pub fn recover_with_filter(cfg: &DeconvConfig, noisy: &GridSignal, filter: &Taps) -> Result<DeconvReport> {
    let mut report = inverse_operator(cfg, noisy)?;
    let filtered = convolve_signal(&report.reconstructed, filter)?;
    report.filter = Some(FilterStage {
        spectrum_before: dft(&report.reconstructed),
        spectrum_after: dft(&filtered),
        filtered,
        taps: filter.len(),
        interior_error: None,
    });
    Ok(report)
}

/// Taps of `h(t) = 2B sinc(2Bt)` (normalized sinc) on `[-half_width, half_width]`,
/// scaled by `dt`. No window and no renormalization: the passband is
/// `|xi| <= B` with the truncation ripple of a rectangular window.
pub fn make_sinc_filter(bandwidth: f64, dt: f64, half_width: f64) -> Result<Taps> {
    for (name, v) in [("bandwidth", bandwidth), ("dt", dt), ("half_width", half_width)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    // Main lobe spans the zeros at +-1/(2B).
    let per_lobe = 1.0 / (bandwidth * dt);
    if per_lobe < crate::grid_signal::MIN_TAPS_PER_LOBE {
        return Err(Error::Resolution(format!(
            "{per_lobe:.2} samples across the filter lobe (B = {bandwidth}, dt = {dt})"
        )));
    }
    let half = (half_width / dt).floor() as usize;
    let values = (0..=2 * half)
        .map(|k| {
            let t = (k as f64 - half as f64) * dt;
            2.0 * bandwidth * sinc(2.0 * bandwidth * t) * dt
        })
        .collect();
    Ok(Taps {
        values,
        center: half,
        dt,
    })
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// `len` samples of zero-mean Gaussian noise with the given variance,
/// reproducible from `seed`. Zero variance gives exact zeros.
pub fn gaussian_noise(len: usize, variance: f64, seed: u64) -> Result<Vec<f64>> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::invalid(format!(
            "noise variance must be non-negative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(vec![0.0; len]);
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..len).map(|_| normal.sample(&mut rng)).collect())
}

/// Interior power of `clean` over interior power of `noise`.
pub fn snr(clean: &GridSignal, noise: &GridSignal, margin: f64) -> Result<f64> {
    if !clean.same_grid(noise) {
        return Err(Error::invalid("signal and noise live on different grids"));
    }
    let p = noise.interior_power(margin);
    Ok(if p > 0.0 {
        clean.interior_power(margin) / p
    } else {
        f64::INFINITY
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_signal::sample_function;
    use crate::polynomial::real::{binomial_row, to_f64, Real};

    fn gaussian(eps: f64, n: usize) -> DeconvConfig {
        DeconvConfig::new(&Kernel::gaussian(), eps, n).unwrap()
    }

    fn blurred(eps: f64, f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> (GridSignal, GridSignal) {
        let s = sample_function(f, t0, t1, n).unwrap();
        let taps = discretize_kernel(&Kernel::gaussian(), eps, s.dt()).unwrap();
        let g = convolve_signal(&s, &taps).unwrap();
        (s, g)
    }

    #[test]
    fn config_validation() {
        let k = Kernel::gaussian();
        assert!(DeconvConfig::new(&k, 0.0, 3).is_err());
        assert!(DeconvConfig::new(&k, 1.0, 0).is_err());
        let mut cfg = DeconvConfig::new(&k, 1.0, 3).unwrap();
        cfg.edge_margin = 0.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn spectral_factor_examples() {
        let cfg = gaussian(0.55, 90);
        assert_eq!(cfg.spectral_factor(0.0).unwrap(), 1.0);
        let xi = 5.0 / (2.0 * std::f64::consts::PI);
        let phi = (-(0.55f64 * 5.0).powi(2)).exp();
        let direct = 1.0 - (1.0 - phi).powi(91);
        let got = cfg.spectral_factor(xi).unwrap();
        assert!((got - direct).abs() < 1e-12);
        assert!(got > 0.0 && got < 1.0);
        let mut last = 0.0;
        for n in [1, 5, 20, 90, 400] {
            let f = gaussian(0.55, n).spectral_factor(0.6).unwrap();
            assert!(f > last);
            last = f;
        }
        assert!(last < 1.0);
    }

    #[test]
    fn residual_count_and_affine_fixed_point() {
        let (s, _) = blurred(0.3, |t| 0.5 * t - 2.0, -20.0, 20.0, 2048);
        let cfg = gaussian(0.3, 7);
        let report = inverse_operator(&cfg, &s).unwrap();
        assert_eq!(report.residual_norms.len(), 8);
        assert_eq!(report.order_used, 7);
        // Padding effects spread like T^7 (std about 1.1) from each end.
        for (i, t) in s.times().enumerate().filter(|(_, t)| t.abs() < 11.0) {
            assert!(
                (report.reconstructed.values()[i] - s.values()[i]).abs() < 1e-8,
                "t = {t}"
            );
        }
    }

    #[test]
    fn residuals_match_powers_of_complement() {
        let (_, g) = blurred(0.4, |t| (1.3 * t).sin() * (-0.02 * t * t).exp(), -12.0, 12.0, 600);
        let cfg = gaussian(0.4, 10);
        let report = inverse_operator(&cfg, &g).unwrap();
        let taps = discretize_kernel(&Kernel::gaussian(), 0.4, g.dt()).unwrap();
        let conv = Convolver::new(&taps, g.len());
        let mut power = g.values().to_vec();
        for m in 0..=10 {
            let t = conv.apply(&power);
            power = power.iter().zip(&t).map(|(a, b)| a - b).collect();
            let norm = (power.iter().map(|v| v * v).sum::<f64>() * g.dt()).sqrt();
            assert!((norm - report.residual_norms[m]).abs() < 1e-9, "m = {m}");
        }
    }

    /// Multiprecision evaluation of `sum_k (-1)^k C(n+1, k+1) T^k g` with the same taps.
    fn binomial_form(g: &[f64], taps: &Taps, n: usize) -> Vec<f64> {
        const BITS: u32 = 160;
        let h: Vec<Real> = taps.values.iter().map(|&v| Real::with_val(BITS, v)).collect();
        let c = taps.center as isize;
        let len = g.len() as isize;
        let conv = |x: &[Real]| -> Vec<Real> {
            (0..len)
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
                .collect()
        };
        let binom = binomial_row(n + 1);
        let mut power: Vec<Real> = g.iter().map(|&v| Real::with_val(BITS, v)).collect();
        let mut sum = vec![Real::new(BITS); g.len()];
        for k in 0..=n {
            let coeff = Real::with_val(BITS, &binom[k + 1]) * if k % 2 == 0 { 1 } else { -1 };
            for (s, p) in sum.iter_mut().zip(&power) {
                *s += Real::with_val(BITS, &coeff * p);
            }
            if k < n {
                power = conv(&power);
            }
        }
        sum.iter().map(to_f64).collect()
    }

    #[test]
    fn recursion_equals_binomial_form() {
        let (_, g) = blurred(0.5, |t| (0.7 * t).sin() + 0.3 * (1.9 * t).cos(), -3.0, 3.0, 128);
        let taps = discretize_kernel(&Kernel::gaussian(), 0.5, g.dt()).unwrap();
        let report = inverse_operator(&gaussian(0.5, 10), &g).unwrap();
        let oracle = binomial_form(g.values(), &taps, 10);
        for (a, b) in report.reconstructed.values().iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_and_all_pass() {
        let zero = GridSignal::new(0.0, 0.01, vec![0.0; 300]).unwrap();
        let cfg = gaussian(0.2, 5);
        let filter = make_sinc_filter(1.0, 0.01, 2.0).unwrap();
        let out = recover_with_filter(&cfg, &zero, &filter).unwrap();
        assert!(out.output().values().iter().all(|&v| v == 0.0));

        let (_, g) = blurred(0.2, |t| (3.0 * t).sin(), -3.0, 3.0, 300);
        let plain = inverse_operator(&cfg, &g).unwrap();
        let passed = recover_with_filter(&cfg, &g, &Taps::identity(g.dt())).unwrap();
        assert_eq!(plain.reconstructed.values(), passed.output().values());
    }

    #[test]
    fn sinc_filter_taps() {
        let dt = 0.01;
        let f = make_sinc_filter(1.0, dt, 8.0).unwrap();
        assert_eq!(f.values[f.center], 2.0 * dt);
        assert!((f.sum() - 1.0).abs() < 0.02);
        let one = GridSignal::new(-30.0, dt, vec![1.0; 6001]).unwrap();
        let out = convolve_signal(&one, &f).unwrap();
        assert!((out.values()[3000] - 1.0).abs() < 0.02);
        assert!(matches!(make_sinc_filter(1.0, 0.2, 8.0), Err(Error::Resolution(_))));
    }

    #[test]
    fn sinc_filter_is_low_pass() {
        let dt = 0.01;
        let f = make_sinc_filter(1.0, dt, 8.0).unwrap();
        let n = 4096;
        let h = crate::fft::forward_real(&f.circular(n));
        let df = 1.0 / (n as f64 * dt);
        for (k, z) in h.iter().enumerate().take(n / 2) {
            let xi = k as f64 * df;
            if xi < 0.9 {
                assert!((z.re - 1.0).abs() < 0.06, "passband at {xi}");
            } else if xi > 1.1 {
                assert!(z.norm() < 0.06, "stopband at {xi}");
            }
        }
    }

    #[test]
    fn noise_is_seeded() {
        let a = gaussian_noise(1000, 0.5, 7).unwrap();
        let b = gaussian_noise(1000, 0.5, 7).unwrap();
        let c = gaussian_noise(1000, 0.5, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let var = a.iter().map(|v| v * v).sum::<f64>() / 1000.0;
        assert!((var - 0.5).abs() < 0.1);
        assert!(gaussian_noise(5, 0.0, 1).unwrap().iter().all(|&v| v == 0.0));
        assert!(gaussian_noise(5, -1.0, 1).is_err());
    }

    #[test]
    fn bump_warns_but_runs() {
        let (_, g) = blurred(0.3, |t| (2.0 * t).sin(), -5.0, 5.0, 400);
        let cfg = DeconvConfig::new(&Kernel::bump(), 0.3, 4).unwrap();
        let report = inverse_operator(&cfg, &g).unwrap();
        assert!(!report.warnings.is_empty());
        assert!(!report.admissibility.unwrap().passes);
    }

    #[test]
    fn auto_stop_only_shortens() {
        let (_, g) = blurred(0.3, |t| (2.0 * t).sin(), -5.0, 5.0, 400);
        let mut cfg = gaussian(0.3, 40);
        cfg.auto_stop = true;
        let report = inverse_operator(&cfg, &g).unwrap();
        assert!(report.order_used <= 40);
        assert_eq!(report.residual_norms.len(), report.order_used + 1);
    }
}
