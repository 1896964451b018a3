//! Unit-mass convolution kernels, their moments and Fourier transforms.
//!
//! A [`Kernel`] is a density `phi` with `∫ phi = 1`. Scaled versions are
//! `phi_eps(x) = phi(x / eps) / eps`, and transforms use the convention
//! `f^(xi) = ∫ f(x) exp(-2 pi i xi x) dx`, so `phi_eps^(xi) = phi^(eps xi)`.

use std::collections::HashMap;
use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, Tolerance};

/// Radius (in units of the unscaled kernel) beyond which the Gaussian is
/// treated as zero. The density there is below 1e-22.
pub const GAUSSIAN_RADIUS: f64 = 10.0 * SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Gaussian,
    Bump,
    Tabulated,
}

impl fmt::Display for KernelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Bump => "bump",
            KernelFamily::Tabulated => "tabulated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    General,
}

#[derive(Debug, Clone)]
enum Shape {
    /// `exp(-(x/2)^2) / sqrt(4 pi)`, variance 2.
    Gaussian,
    /// `exp(-1 / (1 - x^2))` on `(-1, 1)`, divided by its integral.
    Bump,
    /// Piecewise-linear interpolation of samples; zero outside the grid.
    Tabulated { xs: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug)]
struct Inner {
    shape: Shape,
    normalization: f64,
    support_radius: f64,
    parity: Parity,
    moments: Mutex<HashMap<usize, f64>>,
}

/// A normalized convolution kernel. Cloning is cheap and clones share the
/// moment cache.
#[derive(Debug, Clone)]
pub struct Kernel {
    inner: Arc<Inner>,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )))
    }
}

fn bump_raw(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

fn trapezoid(xs: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..xs.len())
        .map(|i| 0.5 * (xs[i] - xs[i - 1]) * (f(i - 1) + f(i)))
        .sum()
}

impl Kernel {
    fn from_parts(shape: Shape, normalization: f64, support_radius: f64, parity: Parity) -> Self {
        Kernel {
            inner: Arc::new(Inner {
                shape,
                normalization,
                support_radius,
                parity,
                moments: Mutex::new(HashMap::new()),
            }),
        }
    }

    /// The Gaussian `(1/sqrt(4 pi)) exp(-(x/2)^2)`.
    pub fn gaussian() -> Self {
        Self::from_parts(Shape::Gaussian, (4.0 * PI).sqrt(), GAUSSIAN_RADIUS, Parity::Even)
    }

    /// The compactly supported bump `1_(-1,1)(x) exp(-1/(1-x^2))`, normalized.
    pub fn bump() -> Self {
        let tol = Tolerance { abs: 1e-14, rel: 1e-13 };
        let half = integrate(bump_raw, 0.0, 1.0, tol).expect("bump normalization converges");
        Self::from_parts(Shape::Bump, 2.0 * half.value, 1.0, Parity::Even)
    }

    /// A kernel given by samples `(x_i, v_i)` with strictly increasing `x_i`,
    /// interpolated linearly and normalized by its trapezoid integral.
    ///
    /// A declared [`Parity::Even`] is spot-checked by comparing `phi(x)` with
    /// `phi(-x)` at every grid point.
    pub fn tabulated(xs: Vec<f64>, values: Vec<f64>, parity: Parity) -> Result<Self> {
        if xs.len() < 2 || xs.len() != values.len() {
            return Err(Error::InvalidInput(
                "tabulated kernel needs at least two (x, value) rows".into(),
            ));
        }
        if xs.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "tabulated kernel contains non-finite values".into(),
            ));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "tabulated x values must be strictly increasing".into(),
            ));
        }
        let mass = trapezoid(&xs, |i| values[i]);
        if !(mass > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tabulated kernel must have positive integral, got {mass}"
            )));
        }
        let radius = xs[0].abs().max(xs[xs.len() - 1].abs());
        let kernel = Self::from_parts(Shape::Tabulated { xs, values }, mass, radius, parity);
        if parity == Parity::Even {
            let Shape::Tabulated { xs, .. } = &kernel.inner.shape else {
                unreachable!()
            };
            let peak = xs.iter().map(|&x| kernel.density(x).abs()).fold(0.0, f64::max);
            for &x in xs {
                let (a, b) = (kernel.density(x), kernel.density(-x));
                if (a - b).abs() > 1e-6 * peak {
                    return Err(Error::InvalidInput(format!(
                        "kernel declared even but phi({x}) = {a} differs from phi({}) = {b}",
                        -x
                    )));
                }
            }
        }
        Ok(kernel)
    }

    /// Reads a two-column `x,value` CSV. A non-numeric first row is taken as a header.
    pub fn tabulated_from_reader<R: Read>(reader: R, parity: Parity) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::InvalidInput(format!(
                    "row {}: expected 2 columns, found {}",
                    row + 1,
                    record.len()
                )));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(x), Ok(v)) => {
                    xs.push(x);
                    values.push(v);
                }
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "row {}: cannot parse numbers from {:?}",
                        row + 1,
                        record
                    )))
                }
            }
        }
        Self::tabulated(xs, values, parity)
    }

    pub fn tabulated_from_csv(path: impl AsRef<Path>, parity: Parity) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::tabulated_from_reader(file, parity)
    }

    pub fn family(&self) -> KernelFamily {
        match self.inner.shape {
            Shape::Gaussian => KernelFamily::Gaussian,
            Shape::Bump => KernelFamily::Bump,
            Shape::Tabulated { .. } => KernelFamily::Tabulated,
        }
    }

    pub fn parity(&self) -> Parity {
        self.inner.parity
    }

    pub fn is_even(&self) -> bool {
        self.inner.parity == Parity::Even
    }

    /// The constant the raw density was divided by to reach unit mass.
    pub fn normalization(&self) -> f64 {
        self.inner.normalization
    }

    /// Radius of the unscaled kernel beyond which it evaluates to zero.
    pub fn support_radius(&self) -> f64 {
        self.inner.support_radius
    }

    /// True when the kernel vanishes identically outside its support radius
    /// (as opposed to being truncated there for numerical purposes).
    pub fn has_compact_support(&self) -> bool {
        !matches!(self.inner.shape, Shape::Gaussian)
    }

    /// Width of the central lobe of the unscaled kernel, used by the
    /// sampling resolution rule.
    pub fn lobe_width(&self) -> f64 {
        match &self.inner.shape {
            Shape::Gaussian => 1.0,
            Shape::Bump => 2.0,
            Shape::Tabulated { xs, .. } => xs[xs.len() - 1] - xs[0],
        }
    }

    /// The unscaled density phi(x) (zero beyond the support radius).
    pub fn density(&self, x: f64) -> f64 {
        match &self.inner.shape {
            Shape::Gaussian => {
                if x.abs() > GAUSSIAN_RADIUS {
                    0.0
                } else {
                    (-0.25 * x * x).exp() / self.inner.normalization
                }
            }
            Shape::Bump => bump_raw(x) / self.inner.normalization,
            Shape::Tabulated { xs, values } => {
                let n = xs.len();
                if x < xs[0] || x > xs[n - 1] {
                    return 0.0;
                }
                let i = xs.partition_point(|&g| g <= x).clamp(1, n - 1);
                let (x0, x1) = (xs[i - 1], xs[i]);
                let w = (x - x0) / (x1 - x0);
                ((1.0 - w) * values[i - 1] + w * values[i]) / self.inner.normalization
            }
        }
    }

    /// `phi_eps(x) = phi(x / eps) / eps`.
    pub fn eval(&self, epsilon: f64, x: f64) -> Result<f64> {
        check_epsilon(epsilon)?;
        if x.abs() > epsilon * self.inner.support_radius {
            return Ok(0.0);
        }
        Ok(self.density(x / epsilon) / epsilon)
    }

    fn compute_moment(&self, m: usize) -> Result<f64> {
        let tol = Tolerance::default();
        let power = |x: f64| x.powi(m as i32);
        match &self.inner.shape {
            Shape::Gaussian => {
                // x^m phi(x) peaks at sqrt(2m); integrate well past the peak
                // rather than stopping at the evaluation radius.
                let radius = GAUSSIAN_RADIUS + (2.0 * m as f64).sqrt();
                let norm = self.inner.normalization;
                let half = integrate(|x| power(x) * (-0.25 * x * x).exp() / norm, 0.0, radius, tol)?;
                Ok(2.0 * half.value)
            }
            Shape::Bump => {
                let norm = self.inner.normalization;
                let half = integrate(|x| power(x) * bump_raw(x) / norm, 0.0, 1.0, tol)?;
                Ok(2.0 * half.value)
            }
            Shape::Tabulated { xs, values } => {
                let norm = self.inner.normalization;
                Ok(trapezoid(xs, |i| power(xs[i]) * values[i]) / norm)
            }
        }
    }

    /// The moment `c_m = ∫ x^m phi(x) dx`. `c_0 = 1` and odd moments of even
    /// kernels are exact; other values are computed once and cached.
    pub fn moment(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Ok(1.0);
        }
        if self.is_even() && m % 2 == 1 {
            return Ok(0.0);
        }
        if let Some(&c) = self.inner.moments.lock().expect("moment cache").get(&m) {
            return Ok(c);
        }
        let c = self.compute_moment(m)?;
        self.inner.moments.lock().expect("moment cache").insert(m, c);
        Ok(c)
    }

    /// Moments `c_0, ..., c_max` in order.
    pub fn moments(&self, max_m: usize) -> Result<Vec<f64>> {
        (0..=max_m).map(|m| self.moment(m)).collect()
    }

    /// `∫ x^m phi_eps(x) dx = c_m eps^m` (zero for odd m when the kernel is even).
    pub fn scaled_moment(&self, epsilon: f64, m: usize) -> Result<f64> {
        check_epsilon(epsilon)?;
        Ok(self.moment(m)? * epsilon.powi(m as i32))
    }

    /// `phi_eps^(xi)` for kernels whose transform is real (even kernels).
    pub fn fourier(&self, epsilon: f64, xi: f64) -> Result<f64> {
        check_epsilon(epsilon)?;
        let w = epsilon * xi;
        match &self.inner.shape {
            Shape::Gaussian => Ok((-4.0 * PI * PI * w * w).exp()),
            Shape::Bump => {
                let norm = self.inner.normalization;
                let tol = Tolerance::default();
                let half = integrate(|x| bump_raw(x) * (2.0 * PI * w * x).cos() / norm, 0.0, 1.0, tol)?;
                Ok(2.0 * half.value)
            }
            Shape::Tabulated { .. } => {
                if !self.is_even() {
                    return Err(Error::invalid(
                        "transform of a general-parity kernel is complex; use fourier_complex",
                    ));
                }
                Ok(self.fourier_complex(epsilon, xi)?.re)
            }
        }
    }

    /// `phi_eps^(xi)` as a complex number; valid for every family.
    pub fn fourier_complex(&self, epsilon: f64, xi: f64) -> Result<Complex64> {
        check_epsilon(epsilon)?;
        match &self.inner.shape {
            Shape::Tabulated { xs, values } => {
                let w = 2.0 * PI * epsilon * xi;
                let norm = self.inner.normalization;
                let re = trapezoid(xs, |i| values[i] * (w * xs[i]).cos()) / norm;
                let im = -trapezoid(xs, |i| values[i] * (w * xs[i]).sin()) / norm;
                Ok(Complex64::new(re, im))
            }
            _ => Ok(Complex64::new(self.fourier(epsilon, xi)?, 0.0)),
        }
    }

    /// Natural log of the transform when a closed form is known. Lets callers
    /// certify positivity where the value itself underflows.
    pub fn ln_fourier(&self, epsilon: f64, xi: f64) -> Option<f64> {
        match self.inner.shape {
            Shape::Gaussian => {
                let w = epsilon * xi;
                Some(-4.0 * PI * PI * w * w)
            }
            _ => None,
        }
    }

    /// Samples `phi_eps^` on `n_grid` points of `[-xi_max, xi_max]` and checks
    /// `0 < phi_eps^ < 2`.
    pub fn check_admissible(&self, epsilon: f64, xi_max: f64, n_grid: usize) -> Result<AdmissibilityReport> {
        check_epsilon(epsilon)?;
        if !(xi_max > 0.0) || n_grid < 2 {
            return Err(Error::invalid("check_admissible needs xi_max > 0 and n_grid >= 2"));
        }
        let step = 2.0 * xi_max / (n_grid - 1) as f64;
        let mut report = AdmissibilityReport {
            epsilon,
            xi_max,
            n_grid,
            min: f64::INFINITY,
            argmin: 0.0,
            max: f64::NEG_INFINITY,
            argmax: 0.0,
            ln_min: None,
            passes: true,
            violations: Vec::new(),
            sign_changes: Vec::new(),
        };
        let mut ln_min = f64::INFINITY;
        let mut have_ln = true;
        let mut prev: Option<(f64, bool)> = None;
        for i in 0..n_grid {
            let xi = -xi_max + step * i as f64;
            let v = self.fourier(epsilon, xi)?;
            let ln = self.ln_fourier(epsilon, xi);
            match ln {
                Some(l) => ln_min = ln_min.min(l),
                None => have_ln = false,
            }
            if v < report.min {
                report.min = v;
                report.argmin = xi;
            }
            if v > report.max {
                report.max = v;
                report.argmax = xi;
            }
            // Underflowed closed forms are still strictly positive.
            let positive = v > 0.0 || ln.is_some_and(f64::is_finite);
            if !(positive && v < 2.0) {
                report.passes = false;
                if report.violations.len() < AdmissibilityReport::MAX_LISTED {
                    report.violations.push(xi);
                }
            }
            if let Some((px, was_positive)) = prev {
                if was_positive != positive && report.sign_changes.len() < AdmissibilityReport::MAX_LISTED {
                    report.sign_changes.push(0.5 * (px + xi));
                }
            }
            prev = Some((xi, positive));
        }
        if have_ln {
            report.ln_min = Some(ln_min);
        }
        Ok(report)
    }
}

/// Outcome of [`Kernel::check_admissible`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub epsilon: f64,
    pub xi_max: f64,
    pub n_grid: usize,
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
    /// Log of the smallest sampled value, when the family has a closed form.
    pub ln_min: Option<f64>,
    pub passes: bool,
    /// Frequencies where `0 < phi_eps^ < 2` fails (first few only).
    pub violations: Vec<f64>,
    /// Approximate zero-crossings of `phi_eps^`; frequencies there cannot be recovered.
    pub sign_changes: Vec<f64>,
}

impl AdmissibilityReport {
    const MAX_LISTED: usize = 64;
}
