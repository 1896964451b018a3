//! Uniformly sampled signals, sampled kernels and their convolution.
//!
//! Convolution zero-pads the signal, forms the full linear convolution and
//! crops back to the original window, so the output lives on the same grid
//! as the input. Samples within a kernel half-width of either end see the
//! padding and are distorted; error metrics use [`GridSignal::interior`].

use std::io::{Read, Write};
use std::ops::Range;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft;
use crate::kernel::Kernel;

/// Minimum samples across a kernel's central lobe.
pub const MIN_TAPS_PER_LOBE: f64 = 8.0;

/// Tap count below which convolution is done directly instead of by FFT.
pub const FFT_CROSSOVER: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSignal {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl GridSignal {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) || !t0.is_finite() {
            return Err(Error::invalid(format!(
                "need finite t0 and dt > 0, got t0 = {t0}, dt = {dt}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "signal needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        Ok(GridSignal { t0, dt, values })
    }

    /// Same grid as `self` with new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::invalid("value count does not match the grid"));
        }
        Self::new(self.t0, self.dt, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + self.dt * i as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    /// True when `(t0, dt, N)` match exactly.
    pub fn same_grid(&self, other: &GridSignal) -> bool {
        self.t0 == other.t0 && self.dt == other.dt && self.len() == other.len()
    }

    fn check_grid(&self, other: &GridSignal) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::invalid("signals live on different grids"))
        }
    }

    pub fn add(&self, other: &GridSignal) -> Result<GridSignal> {
        self.check_grid(other)?;
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &GridSignal) -> Result<GridSignal> {
        self.check_grid(other)?;
        self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> Result<GridSignal> {
        self.with_values(self.values.iter().map(|v| v * factor).collect())
    }

    /// Index range left after dropping `margin * N` samples from each end.
    pub fn interior(&self, margin: f64) -> Range<usize> {
        let cut = ((margin.clamp(0.0, 0.4999)) * self.len() as f64).floor() as usize;
        cut..self.len() - cut
    }

    /// Discrete L2 norm `sqrt(sum v^2 dt)` over `range`.
    pub fn l2_norm_over(&self, range: Range<usize>) -> f64 {
        (self.values[range].iter().map(|v| v * v).sum::<f64>() * self.dt).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_over(0..self.len())
    }

    /// `||self - reference|| / ||reference||` over the interior.
    pub fn interior_relative_error(&self, reference: &GridSignal, margin: f64) -> Result<f64> {
        self.check_grid(reference)?;
        let range = self.interior(margin);
        let diff: f64 = range
            .clone()
            .map(|i| (self.values[i] - reference.values[i]).powi(2))
            .sum();
        let norm: f64 = range.map(|i| reference.values[i].powi(2)).sum();
        Ok(if norm > 0.0 { (diff / norm).sqrt() } else { diff.sqrt() })
    }

    /// Mean power over the interior.
    pub fn interior_power(&self, margin: f64) -> f64 {
        let range = self.interior(margin);
        let n = range.len().max(1) as f64;
        self.values[range].iter().map(|v| v * v).sum::<f64>() / n
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,value")?;
        for (t, v) in self.times().zip(&self.values) {
            writeln!(out, "{t:?},{v:?}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }

    /// Reads `t,value` rows; the time column must be uniformly spaced.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut ts = Vec::new();
        let mut vs = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidInput(format!("row {}: expected two numbers", row + 2)))
            };
            ts.push(parse(0)?);
            vs.push(parse(1)?);
        }
        if ts.len() < 2 {
            return Err(Error::InvalidInput("signal CSV needs at least 2 rows".into()));
        }
        let dt = (ts[ts.len() - 1] - ts[0]) / (ts.len() - 1) as f64;
        for (i, &t) in ts.iter().enumerate() {
            if (t - (ts[0] + dt * i as f64)).abs() > 1e-9 * dt.abs().max(1e-300) * (ts.len() as f64) {
                return Err(Error::InvalidInput(format!("row {}: time grid is not uniform", i + 2)));
            }
        }
        Self::new(ts[0], dt, vs)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?)
    }
}

/// Samples `f` at `n` equispaced points on `[t0, t1]`.
pub fn sample_function<F: Fn(f64) -> f64>(f: F, t0: f64, t1: f64, n: usize) -> Result<GridSignal> {
    if !(t1 > t0) || n < 2 {
        return Err(Error::invalid(format!(
            "need t1 > t0 and n >= 2, got [{t0}, {t1}], n = {n}"
        )));
    }
    let dt = (t1 - t0) / (n - 1) as f64;
    let values: Vec<f64> = (0..n).map(|i| f(t0 + dt * i as f64)).collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("f(t_{i}) is not finite")));
    }
    GridSignal::new(t0, dt, values)
}

/// A sampled convolution kernel or filter. `values[center]` sits at offset
/// zero; tap `k` sits at `(k - center) * dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Taps {
    pub values: Vec<f64>,
    pub center: usize,
    pub dt: f64,
}

impl Taps {
    /// The single unit tap (identity filter).
    pub fn identity(dt: f64) -> Self {
        Taps {
            values: vec![1.0],
            center: 0,
            dt,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Tap values laid out for circular convolution of length `n`
    /// (offset zero at index 0, negative offsets wrapped to the end).
    pub fn circular(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (k, &v) in self.values.iter().enumerate() {
            let offset = k as isize - self.center as isize;
            out[offset.rem_euclid(n as isize) as usize] += v;
        }
        out
    }
}

/// Samples `phi_eps` on a symmetric odd-length grid covering its effective
/// support, multiplied by `dt` and renormalized so the taps sum to 1.
pub fn discretize_kernel(kernel: &Kernel, epsilon: f64, dt: f64) -> Result<Taps> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid(format!("dt must be positive, got {dt}")));
    }
    let per_lobe = epsilon * kernel.lobe_width() / dt;
    if !(per_lobe >= MIN_TAPS_PER_LOBE) {
        return Err(Error::Resolution(format!(
            "{per_lobe:.2} samples across the kernel lobe (eps = {epsilon}, dt = {dt}); need at least {MIN_TAPS_PER_LOBE}"
        )));
    }
    let half = (epsilon * kernel.support_radius() / dt).ceil() as usize;
    let mut values = (0..=2 * half)
        .map(|k| Ok(kernel.eval(epsilon, (k as f64 - half as f64) * dt)? * dt))
        .collect::<Result<Vec<f64>>>()?;
    let sum: f64 = values.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::Resolution("sampled kernel has no mass".into()));
    }
    values.iter_mut().for_each(|v| *v /= sum);
    Ok(Taps {
        values,
        center: half,
        dt,
    })
}

fn check_dt(signal_dt: f64, taps: &Taps) -> Result<()> {
    if (signal_dt - taps.dt).abs() > 1e-12 * signal_dt {
        return Err(Error::invalid(format!(
            "tap spacing {} does not match signal spacing {}",
            taps.dt, signal_dt
        )));
    }
    Ok(())
}

/// Direct O(N L) linear convolution cropped to the input window.
pub fn convolve_direct(values: &[f64], taps: &Taps) -> Vec<f64> {
    let n = values.len() as isize;
    let c = taps.center as isize;
    (0..n)
        .map(|i| {
            taps.values
                .iter()
                .enumerate()
                .filter_map(|(k, &h)| {
                    let j = i - k as isize + c;
                    (0..n).contains(&j).then(|| h * values[j as usize])
                })
                .sum()
        })
        .collect()
}

/// Convolution with fixed taps against signals of a fixed length. The
/// padded kernel spectrum is computed once.
#[derive(Debug, Clone)]
pub struct Convolver {
    taps: Taps,
    len: usize,
    fft_len: usize,
    spectrum: Option<(fft::Plan, Vec<Complex64>)>,
}

impl Convolver {
    pub fn new(taps: &Taps, len: usize) -> Self {
        Self::with_strategy(taps, len, taps.len() >= FFT_CROSSOVER)
    }

    /// `use_fft` overrides the size-based choice of convolution path.
    pub fn with_strategy(taps: &Taps, len: usize, use_fft: bool) -> Self {
        let fft_len = (len + taps.len() - 1).next_power_of_two();
        let spectrum = use_fft.then(|| {
            let plan = fft::Plan::new(fft_len);
            let mut padded = vec![Complex64::new(0.0, 0.0); fft_len];
            for (p, &v) in padded.iter_mut().zip(&taps.values) {
                p.re = v;
            }
            plan.forward_in_place(&mut padded);
            (plan, padded)
        });
        Convolver {
            taps: taps.clone(),
            len,
            fft_len,
            spectrum,
        }
    }

    pub fn taps(&self) -> &Taps {
        &self.taps
    }

    pub fn uses_fft(&self) -> bool {
        self.spectrum.is_some()
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.len, "convolver built for a different length");
        let Some((plan, spectrum)) = &self.spectrum else {
            return convolve_direct(values, &self.taps);
        };
        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (b, &v) in buf.iter_mut().zip(values) {
            b.re = v;
        }
        plan.forward_in_place(&mut buf);
        for (b, h) in buf.iter_mut().zip(spectrum) {
            *b *= h;
        }
        plan.inverse_in_place(&mut buf);
        let scale = 1.0 / self.fft_len as f64;
        let c = self.taps.center;
        (0..self.len).map(|i| buf[i + c].re * scale).collect()
    }

    pub fn convolve(&self, signal: &GridSignal) -> Result<GridSignal> {
        check_dt(signal.dt(), &self.taps)?;
        if signal.len() != self.len {
            return Err(Error::invalid("signal length does not match the convolver"));
        }
        signal.with_values(self.apply(signal.values()))
    }
}

/// Zero-padded linear convolution of `signal` with `taps`, cropped back to
/// the signal's grid. Direct below [`FFT_CROSSOVER`] taps, FFT above.
pub fn convolve_signal(signal: &GridSignal, taps: &Taps) -> Result<GridSignal> {
    check_dt(signal.dt(), taps)?;
    Convolver::new(taps, signal.len()).convolve(signal)
}

/// DFT bins of a sampled signal, DC first. Bin `k` corresponds to frequency
/// `k * df` (or `(k - N) * df` above Nyquist).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub df: f64,
    pub bins: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn frequency(&self, k: usize) -> f64 {
        k as f64 * self.df
    }

    /// Frequency of bin `k` folded to `(-N/2, N/2]`.
    pub fn signed_frequency(&self, k: usize) -> f64 {
        let n = self.len();
        if 2 * k > n {
            (k as f64 - n as f64) * self.df
        } else {
            k as f64 * self.df
        }
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.bins.iter().map(|z| z.norm()).collect()
    }

    /// Magnitudes multiplied by `dt = 1 / (N df)`, comparable with the
    /// continuous transform.
    pub fn scaled_magnitudes(&self) -> Vec<f64> {
        let dt = 1.0 / (self.len() as f64 * self.df);
        self.bins.iter().map(|z| z.norm() * dt).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "freq,re,im,abs")?;
        for (k, z) in self.bins.iter().enumerate() {
            writeln!(out, "{:?},{:?},{:?},{:?}", self.frequency(k), z.re, z.im, z.norm())?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}

/// Unnormalized forward DFT.
pub fn dft(signal: &GridSignal) -> Spectrum {
    Spectrum {
        df: 1.0 / (signal.len() as f64 * signal.dt()),
        bins: fft::forward_real(signal.values()),
    }
}

/// Inverse DFT (with `1/N`) placed on a grid starting at `t0`; the real part is kept.
pub fn idft(spectrum: &Spectrum, t0: f64) -> Result<GridSignal> {
    let n = spectrum.len();
    if n < 2 {
        return Err(Error::InvalidInput("spectrum needs at least 2 bins".into()));
    }
    let dt = 1.0 / (n as f64 * spectrum.df);
    let values = fft::inverse(&spectrum.bins).into_iter().map(|z| z.re).collect();
    GridSignal::new(t0, dt, values)
}
