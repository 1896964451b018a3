//! The three reference experiments.
//!
//! `fig1` inverts the convolution of a degree-50 Taylor polynomial exactly in
//! coefficient space and, for comparison, on a sampled window where zero
//! padding corrupts the ends. `fig2` blurs `sin(5t) + sin(3t)` with a
//! Gaussian and deconvolves it with the order-90 series. `fig3` adds seeded
//! Gaussian noise before deconvolving and low-pass filters the result.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use deconv_core::grid_signal::Taps;
use deconv_core::polynomial::real::{real, Real, PRECISION};
use deconv_core::{
    convolve_signal, dft, discretize_kernel, gaussian_noise, inverse_operator, make_sinc_filter, recover_with_filter,
    sample_function, snr, AdmissibilityReport, ConvOperator, DeconvConfig, DeconvReport, GridSignal, Kernel,
    Polynomial1D, Spectrum,
};
use serde::Serialize;

use crate::analysis::{peak_magnitude_error, peak_stats, PeakStats};
use crate::config::{ExperimentId, ExperimentSpec, FilterKind};
use crate::error::AppError;

/// Angular frequencies of the test signal.
pub const OMEGAS: [f64; 2] = [3.0, 5.0];

pub fn sin_mix(t: f64) -> f64 {
    (5.0 * t).sin() + (3.0 * t).sin()
}

/// Maclaurin polynomial of `sin(5x) + sin(3x)` through `x^degree`.
///
/// Built in working precision: the top coefficients (about 1e-29 at degree
/// 50) are far below the relative trim applied to f64 input.
pub fn taylor_sin_mix(degree: usize) -> Result<Polynomial1D, AppError> {
    if degree < 1 {
        return Err(AppError::Usage("Taylor degree must be at least 1".into()));
    }
    let mut coeffs = vec![real(0.0); degree + 1];
    // a^k / k! built incrementally.
    let (mut p5, mut p3) = (real(1.0), real(1.0));
    for k in 1..=degree {
        p5 *= 5u32;
        p5 /= k as u32;
        p3 *= 3u32;
        p3 /= k as u32;
        if k % 2 == 1 {
            let sum = Real::with_val(PRECISION, &p5 + &p3);
            coeffs[k] = if (k - 1) / 2 % 2 == 0 { sum } else { -sum };
        }
    }
    Ok(Polynomial1D::from_reals(coeffs))
}

fn check_id(spec: &ExperimentSpec, allowed: &[ExperimentId]) -> Result<(), AppError> {
    if allowed.contains(&spec.experiment) {
        Ok(())
    } else {
        Err(AppError::Usage(format!(
            "spec is for {}, not {:?}",
            spec.experiment, allowed
        )))
    }
}

fn grid_signal(spec: &ExperimentSpec, f: impl Fn(f64) -> f64) -> Result<GridSignal, AppError> {
    Ok(sample_function(f, spec.grid.t0, spec.grid.t1, spec.grid.n)?)
}

fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<(), AppError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path).map_err(deconv_core::Error::from)?);
    let rows = columns.iter().map(|c| c.len()).min().unwrap_or(0);
    let mut text = header.join(",");
    text.push('\n');
    for i in 0..rows {
        let row: Vec<String> = columns.iter().map(|c| format!("{:?}", c[i])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(deconv_core::Error::from)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), AppError> {
    let mut text = serde_json::to_string_pretty(value).map_err(deconv_core::Error::from)?;
    text.push('\n');
    fs::write(path, text).map_err(deconv_core::Error::from)?;
    Ok(())
}

/// The configuration as recorded in summaries. The output location is left out so that
/// runs into different directories write identical files.
fn recorded_config(spec: &ExperimentSpec) -> Result<serde_json::Value, AppError> {
    let mut value = serde_json::to_value(spec).map_err(deconv_core::Error::from)?;
    if let Some(map) = value.as_object_mut() {
        map.remove("output_dir");
    }
    Ok(value)
}

fn prepare_dir(dir: &Path) -> Result<(), AppError> {
    fs::create_dir_all(dir).map_err(deconv_core::Error::from)?;
    Ok(())
}

/// Outcome of the polynomial experiment.
#[derive(Debug, Clone)]
pub struct Fig1Outcome {
    pub spec: ExperimentSpec,
    pub polynomial: Polynomial1D,
    pub convolved: Polynomial1D,
    pub recovered: Polynomial1D,
    /// `max |recovered - p| / max |p|` over coefficients.
    pub coefficient_error: f64,
    /// Largest `|recovered(x) - p(x)|` on the plot grid.
    pub pointwise_error: f64,
    pub signal: SampledAnalogue,
    /// Transform check of the kernel over `|xi| <= 5`.
    pub admissibility: Option<AdmissibilityReport>,
}

/// The polynomial sampled on the plot grid, blurred by discrete convolution
/// and passed through `floor(degree / 2)` iterations of the sampled series.
#[derive(Debug, Clone)]
pub struct SampledAnalogue {
    pub truth: GridSignal,
    pub convolved: GridSignal,
    pub recovered: GridSignal,
    pub iterations: usize,
    pub interior_error: f64,
    pub interior_max_error: f64,
    pub edge_max_error: f64,
}

#[derive(Serialize)]
struct Fig1Summary<'a> {
    experiment: ExperimentId,
    config: serde_json::Value,
    reconstructed_defaults: Vec<&'static str>,
    degree: usize,
    coefficient_error: f64,
    pointwise_error: f64,
    sampled: SampledSummary,
    admissibility: &'a Option<AdmissibilityReport>,
}

#[derive(Serialize)]
struct SampledSummary {
    iterations: usize,
    interior_relative_error: f64,
    interior_max_error: f64,
    edge_max_error: f64,
}

pub fn run_fig1(spec: &ExperimentSpec) -> Result<Fig1Outcome, AppError> {
    check_id(spec, &[ExperimentId::Fig1])?;
    let kernel = spec.build_kernel()?;
    let p = taylor_sin_mix(spec.order)?;
    let op = ConvOperator::new(&kernel, spec.epsilon, p.degree())?;
    let convolved = op.convolve(&p)?;
    let recovered = op.invert(&convolved)?;
    let coefficient_error = recovered.relative_error(&p);

    let truth = grid_signal(spec, |x| p.eval(x))?;
    let pointwise_error = truth
        .times()
        .map(|x| (recovered.eval(x) - p.eval(x)).abs())
        .fold(0.0, f64::max);

    let taps = discretize_kernel(&kernel, spec.epsilon, truth.dt())?;
    let blurred = convolve_signal(&truth, &taps)?;
    let iterations = p.degree() / 2;
    let sampled_recovered = if iterations == 0 {
        blurred.clone()
    } else {
        let mut cfg = DeconvConfig::new(&kernel, spec.epsilon, iterations)?;
        cfg.edge_margin = spec.edge_margin;
        cfg.admissibility_check = false;
        inverse_operator(&cfg, &blurred)?.reconstructed
    };
    let interior = truth.interior(spec.edge_margin);
    let mut interior_max_error = 0.0f64;
    let mut edge_max_error = 0.0f64;
    for (i, (a, b)) in sampled_recovered.values().iter().zip(truth.values()).enumerate() {
        let e = (a - b).abs();
        if interior.contains(&i) {
            interior_max_error = interior_max_error.max(e);
        } else {
            edge_max_error = edge_max_error.max(e);
        }
    }
    let signal = SampledAnalogue {
        interior_error: sampled_recovered.interior_relative_error(&truth, spec.edge_margin)?,
        truth,
        convolved: blurred,
        recovered: sampled_recovered,
        iterations,
        interior_max_error,
        edge_max_error,
    };
    let admissibility = kernel.check_admissible(spec.epsilon, 5.0, 201).ok();

    Ok(Fig1Outcome {
        spec: spec.clone(),
        polynomial: p,
        convolved,
        recovered,
        coefficient_error,
        pointwise_error,
        signal,
        admissibility,
    })
}

impl Fig1Outcome {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, AppError> {
        prepare_dir(dir)?;
        let xs: Vec<f64> = self.signal.truth.times().collect();
        let eval = |q: &Polynomial1D| xs.iter().map(|&x| q.eval(x)).collect::<Vec<f64>>();
        let (p, tp, back) = (eval(&self.polynomial), eval(&self.convolved), eval(&self.recovered));
        let err: Vec<f64> = back.iter().zip(&p).map(|(a, b)| a - b).collect();
        let poly_csv = dir.join("fig1_polynomial.csv");
        write_columns(
            &poly_csv,
            &["x", "p", "convolved", "recovered", "error"],
            &[&xs, &p, &tp, &back, &err],
        )?;

        let s = &self.signal;
        let serr: Vec<f64> = s
            .recovered
            .values()
            .iter()
            .zip(s.truth.values())
            .map(|(a, b)| a - b)
            .collect();
        let signal_csv = dir.join("fig1_signal.csv");
        write_columns(
            &signal_csv,
            &["t", "p", "convolved", "recovered", "error"],
            &[&xs, s.truth.values(), s.convolved.values(), s.recovered.values(), &serr],
        )?;

        #[derive(Serialize)]
        struct Coefficients {
            p: Vec<f64>,
            convolved: Vec<f64>,
            recovered: Vec<f64>,
        }
        let coeff_json = dir.join("fig1_coefficients.json");
        write_json(
            &coeff_json,
            &Coefficients {
                p: self.polynomial.to_f64_vec(),
                convolved: self.convolved.to_f64_vec(),
                recovered: self.recovered.to_f64_vec(),
            },
        )?;

        let summary_json = dir.join("fig1_summary.json");
        write_json(
            &summary_json,
            &Fig1Summary {
                experiment: self.spec.experiment,
                config: recorded_config(&self.spec)?,
                reconstructed_defaults: self.spec.reconstructed_defaults(),
                degree: self.polynomial.degree(),
                coefficient_error: self.coefficient_error,
                pointwise_error: self.pointwise_error,
                sampled: SampledSummary {
                    iterations: s.iterations,
                    interior_relative_error: s.interior_error,
                    interior_max_error: s.interior_max_error,
                    edge_max_error: s.edge_max_error,
                },
                admissibility: &self.admissibility,
            },
        )?;
        Ok(vec![poly_csv, signal_csv, coeff_json, summary_json])
    }
}

/// Outcome of the signal experiments.
#[derive(Debug, Clone)]
pub struct SignalOutcome {
    pub spec: ExperimentSpec,
    pub truth: GridSignal,
    pub kernel: Kernel,
    pub convolved: GridSignal,
    /// Convolved signal plus noise; absent for the noiseless experiment.
    pub noisy: Option<GridSignal>,
    pub report: DeconvReport,
    pub snr: Option<f64>,
    pub truth_spectrum: Spectrum,
    pub reconstructed_spectrum: Spectrum,
    /// Peaks of the final output (filtered when a filter ran).
    pub peaks: Vec<PeakStats>,
    /// Peaks of the unfiltered reconstruction.
    pub unfiltered_peaks: Vec<PeakStats>,
    /// `| |X_b| / |F_b| - 1 |` for the reconstruction at each test frequency.
    pub peak_errors: Vec<f64>,
}

impl SignalOutcome {
    /// The final output: filtered if a filter ran, the reconstruction otherwise.
    pub fn output(&self) -> &GridSignal {
        self.report.output()
    }
}

#[derive(Serialize)]
struct SignalSummary<'a> {
    experiment: ExperimentId,
    config: serde_json::Value,
    reconstructed_defaults: Vec<&'static str>,
    function: &'static str,
    dt: f64,
    report: &'a DeconvReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    snr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    snr_definition: Option<&'static str>,
    peaks: &'a [PeakStats],
    unfiltered_peaks: &'a [PeakStats],
    peak_magnitude_errors: &'a [f64],
}

pub fn run_fig2(spec: &ExperimentSpec) -> Result<SignalOutcome, AppError> {
    check_id(spec, &[ExperimentId::Fig2])?;
    run_signal(spec, false)
}

/// The noisy pipeline; also used for `custom` specs.
pub fn run_fig3(spec: &ExperimentSpec) -> Result<SignalOutcome, AppError> {
    check_id(spec, &[ExperimentId::Fig3, ExperimentId::Custom])?;
    run_signal(spec, true)
}

fn run_signal(spec: &ExperimentSpec, noisy: bool) -> Result<SignalOutcome, AppError> {
    let kernel = spec.build_kernel()?;
    let truth = grid_signal(spec, sin_mix)?;
    let taps = discretize_kernel(&kernel, spec.epsilon, truth.dt())?;
    let convolved = convolve_signal(&truth, &taps)?;
    let mut cfg = DeconvConfig::new(&kernel, spec.epsilon, spec.order)?;
    cfg.edge_margin = spec.edge_margin;

    let (noisy_signal, snr_value, report) = if noisy {
        let eta = convolved.with_values(gaussian_noise(convolved.len(), spec.noise.variance, spec.noise.seed)?)?;
        let input = convolved.add(&eta)?;
        let filter = match spec.filter.kind {
            FilterKind::Sinc => make_sinc_filter(spec.filter.bandwidth, truth.dt(), spec.filter.half_width)?,
            FilterKind::Allpass => Taps::identity(truth.dt()),
        };
        let report = recover_with_filter(&cfg, &input, &filter)?;
        let ratio = snr(&convolved, &eta, spec.edge_margin)?;
        (Some(input), Some(ratio), report)
    } else {
        (None, None, inverse_operator(&cfg, &convolved)?)
    };
    let report = report.with_reference(&truth)?;

    let truth_spectrum = dft(&truth);
    let reconstructed_spectrum = dft(&report.reconstructed);
    let output_spectrum = report
        .filter
        .as_ref()
        .map(|s| &s.spectrum_after)
        .unwrap_or(&reconstructed_spectrum);
    let peaks = OMEGAS.iter().map(|&w| peak_stats(output_spectrum, w)).collect();
    let unfiltered_peaks = OMEGAS.iter().map(|&w| peak_stats(&reconstructed_spectrum, w)).collect();
    let peak_errors = OMEGAS
        .iter()
        .map(|&w| peak_magnitude_error(&reconstructed_spectrum, &truth_spectrum, w))
        .collect();

    Ok(SignalOutcome {
        spec: spec.clone(),
        truth,
        kernel,
        convolved,
        noisy: noisy_signal,
        report,
        snr: snr_value,
        truth_spectrum,
        reconstructed_spectrum,
        peaks,
        unfiltered_peaks,
        peak_errors,
    })
}

impl SignalOutcome {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>, AppError> {
        prepare_dir(dir)?;
        let id = self.spec.experiment;
        let ts: Vec<f64> = self.truth.times().collect();
        let eps = self.spec.epsilon;
        let phi: Vec<f64> = ts.iter().map(|&t| self.kernel.eval(eps, t)).collect::<Result<_, _>>()?;

        let mut header = vec!["t", "f", "phi", "convolved"];
        let mut columns: Vec<&[f64]> = vec![&ts, self.truth.values(), &phi, self.convolved.values()];
        if let Some(n) = &self.noisy {
            header.push("noisy");
            columns.push(n.values());
        }
        header.push("reconstructed");
        columns.push(self.report.reconstructed.values());
        if let Some(stage) = &self.report.filter {
            header.push("filtered");
            columns.push(stage.filtered.values());
        }
        let time_csv = dir.join(format!("{id}_time.csv"));
        write_columns(&time_csv, &header, &columns)?;

        // Non-negative frequencies, magnitudes scaled by dt.
        let half = self.truth.len() / 2 + 1;
        let scaled = |s: &Spectrum| s.scaled_magnitudes()[..half].to_vec();
        let freq: Vec<f64> = (0..half).map(|k| self.truth_spectrum.frequency(k)).collect();
        let omega: Vec<f64> = freq.iter().map(|f| 2.0 * std::f64::consts::PI * f).collect();
        let phi_hat: Vec<f64> = freq
            .iter()
            .map(|&xi| self.kernel.fourier_complex(eps, xi).map(|z| z.norm()))
            .collect::<Result<_, _>>()?;
        let factor: Vec<f64> = self.report.spectral_factor.iter().map(|s| s.factor).collect();
        let mut header = vec!["freq", "omega", "f", "phi", "convolved"];
        let mut owned: Vec<Vec<f64>> = vec![
            freq,
            omega,
            scaled(&self.truth_spectrum),
            phi_hat,
            scaled(&dft(&self.convolved)),
        ];
        if let Some(n) = &self.noisy {
            header.push("noisy");
            owned.push(scaled(&dft(n)));
        }
        header.push("reconstructed");
        owned.push(scaled(&self.reconstructed_spectrum));
        if let Some(stage) = &self.report.filter {
            header.push("filtered");
            owned.push(scaled(&stage.spectrum_after));
        }
        if factor.len() == half {
            header.push("factor");
            owned.push(factor);
        }
        let refs: Vec<&[f64]> = owned.iter().map(|v| v.as_slice()).collect();
        let spectrum_csv = dir.join(format!("{id}_spectrum.csv"));
        write_columns(&spectrum_csv, &header, &refs)?;

        let summary_json = dir.join(format!("{id}_summary.json"));
        write_json(
            &summary_json,
            &SignalSummary {
                experiment: id,
                config: recorded_config(&self.spec)?,
                reconstructed_defaults: self.spec.reconstructed_defaults(),
                function: "sin(5t) + sin(3t)",
                dt: self.truth.dt(),
                report: &self.report,
                snr: self.snr,
                snr_definition: self
                    .snr
                    .map(|_| "interior mean power of the blurred signal over interior mean power of the noise"),
                peaks: &self.peaks,
                unfiltered_peaks: &self.unfiltered_peaks,
                peak_magnitude_errors: &self.peak_errors,
            },
        )?;
        Ok(vec![time_csv, spectrum_csv, summary_json])
    }
}

/// Runs the experiment named by `spec` and writes its artifacts to `dir`.
pub fn run_and_write(spec: &ExperimentSpec, dir: &Path) -> Result<Vec<PathBuf>, AppError> {
    match spec.experiment {
        ExperimentId::Fig1 => run_fig1(spec)?.write(dir),
        ExperimentId::Fig2 => run_fig2(spec)?.write(dir),
        ExperimentId::Fig3 | ExperimentId::Custom => run_fig3(spec)?.write(dir),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_examples() {
        assert_eq!(taylor_sin_mix(1).unwrap().to_f64_vec(), vec![0.0, 8.0]);
        let c = taylor_sin_mix(3).unwrap().to_f64_vec();
        assert_eq!(c.len(), 4);
        assert_eq!(c[1], 8.0);
        assert!((c[3] + 152.0 / 6.0).abs() < 1e-12);
        assert_eq!(c[2], 0.0);
        let p = taylor_sin_mix(50).unwrap();
        for i in 0..=400 {
            let x = -2.0 + 0.01 * i as f64;
            assert!((p.eval(x) - sin_mix(x)).abs() < 1e-6, "x = {x}");
        }
        assert!(taylor_sin_mix(0).is_err());
    }

    #[test]
    fn affine_fig1_variant_is_exact() {
        let mut spec = ExperimentSpec::defaults(ExperimentId::Fig1);
        spec.order = 1;
        let out = run_fig1(&spec).unwrap();
        assert_eq!(out.coefficient_error, 0.0);
        assert_eq!(out.pointwise_error, 0.0);
    }

    #[test]
    fn wrong_experiment_rejected() {
        let spec = ExperimentSpec::defaults(ExperimentId::Fig1);
        assert!(matches!(run_fig2(&spec), Err(AppError::Usage(_))));
        assert!(matches!(run_fig3(&spec), Err(AppError::Usage(_))));
    }
}
