use std::ops::{Add, Mul, Neg, Sub};

use super::real::{real, to_f64, zero, Real};

/// Relative size below which trailing input coefficients are dropped.
pub const TRIM_THRESHOLD: f64 = 1e-14;

/// Dense univariate polynomial `a_0 + a_1 x + ... + a_n x^n` with
/// working-precision coefficients. Trailing exact zeros are never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial1D {
    coeffs: Vec<Real>,
}

impl Polynomial1D {
    pub fn zero() -> Self {
        Polynomial1D { coeffs: Vec::new() }
    }

    /// Builds from f64 coefficients (index = power). Trailing entries whose
    /// magnitude is below `1e-14 * max|a|` are stripped.
    pub fn from_f64(coeffs: &[f64]) -> Self {
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        let keep = coeffs
            .iter()
            .rposition(|c| c.abs() > TRIM_THRESHOLD * max)
            .map_or(0, |i| i + 1);
        Polynomial1D {
            coeffs: coeffs[..keep].iter().map(|&c| real(c)).collect(),
        }
    }

    /// Builds from working-precision coefficients; only exact trailing zeros are stripped.
    pub fn from_reals(mut coeffs: Vec<Real>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial1D { coeffs }
    }

    /// `coeff * x^k`.
    pub fn monomial(k: usize, coeff: f64) -> Self {
        let mut c = vec![0.0; k + 1];
        c[k] = coeff;
        Self::from_f64(&c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Index of the highest nonzero coefficient; 0 for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Real] {
        &self.coeffs
    }

    /// Coefficient of `x^k` rounded to f64 (0 past the degree).
    pub fn coeff(&self, k: usize) -> f64 {
        self.coeffs.get(k).map_or(0.0, to_f64)
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.coeffs.iter().map(to_f64).collect()
    }

    /// Evaluates by Horner's rule in working precision.
    pub fn eval(&self, x: f64) -> f64 {
        let x = real(x);
        let mut acc = zero();
        for c in self.coeffs.iter().rev() {
            acc *= &x;
            acc += c;
        }
        to_f64(&acc)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| to_f64(c).abs()).fold(0.0, f64::max)
    }

    /// `max_k |a_k - b_k| / max_k |b_k|` against `reference` (absolute when
    /// the reference is zero).
    pub fn relative_error(&self, reference: &Polynomial1D) -> f64 {
        let diff = (self - reference).max_abs();
        let scale = reference.max_abs();
        if scale > 0.0 {
            diff / scale
        } else {
            diff
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        let f = real(factor);
        Self::from_reals(self.coeffs.iter().map(|c| Real::with_val(c.prec(), c * &f)).collect())
    }
}

fn zip_with(a: &Polynomial1D, b: &Polynomial1D, f: impl Fn(&Real, &Real) -> Real) -> Polynomial1D {
    let n = a.coeffs.len().max(b.coeffs.len());
    let z = zero();
    let out = (0..n)
        .map(|k| f(a.coeffs.get(k).unwrap_or(&z), b.coeffs.get(k).unwrap_or(&z)))
        .collect();
    Polynomial1D::from_reals(out)
}

impl Add for &Polynomial1D {
    type Output = Polynomial1D;
    fn add(self, rhs: &Polynomial1D) -> Polynomial1D {
        zip_with(self, rhs, |a, b| Real::with_val(a.prec(), a + b))
    }
}

impl Sub for &Polynomial1D {
    type Output = Polynomial1D;
    fn sub(self, rhs: &Polynomial1D) -> Polynomial1D {
        zip_with(self, rhs, |a, b| Real::with_val(a.prec(), a - b))
    }
}

impl Neg for &Polynomial1D {
    type Output = Polynomial1D;
    fn neg(self) -> Polynomial1D {
        Polynomial1D {
            coeffs: self.coeffs.iter().map(|c| Real::with_val(c.prec(), -c)).collect(),
        }
    }
}

impl Mul<f64> for &Polynomial1D {
    type Output = Polynomial1D;
    fn mul(self, rhs: f64) -> Polynomial1D {
        self.scale(rhs)
    }
}
