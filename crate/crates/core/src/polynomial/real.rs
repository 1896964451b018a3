//! Working-precision scalar for polynomial coefficients.
//!
//! Convolution with a Gaussian of moderate width maps `x^50` to a polynomial
//! whose low-order coefficients are around 1e48, so coefficient arithmetic in
//! f64 cannot invert it. Coefficients are MPFR floats with [`PRECISION`] bits.

use rug::float::Round;
use rug::ops::Pow;
use rug::Float;

/// Mantissa bits of every polynomial coefficient.
pub const PRECISION: u32 = 384;

pub type Real = Float;

pub fn real(x: f64) -> Real {
    Float::with_val(PRECISION, x)
}

pub fn zero() -> Real {
    Float::new(PRECISION)
}

pub fn to_f64(x: &Real) -> f64 {
    x.to_f64_round(Round::Nearest)
}

/// `base^k` in working precision.
pub fn powi(base: f64, k: u32) -> Real {
    real(base).pow(k)
}

/// Row `n` of Pascal's triangle, exact in working precision for n < 380.
pub fn binomial_row(n: usize) -> Vec<Real> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = real(1.0);
    row.push(c.clone());
    for k in 1..=n {
        c *= (n - k + 1) as u32;
        c /= k as u32;
        row.push(c.clone());
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials_are_exact_integers() {
        let row = binomial_row(60);
        assert_eq!(to_f64(&row[30]), 118_264_581_564_861_424.0);
        for c in &row {
            assert!(c.is_integer());
        }
        let sum: Real = row.iter().fold(zero(), |acc, c| acc + c);
        assert_eq!(sum, real(2f64.powi(60)));
    }

    #[test]
    fn powers() {
        assert_eq!(to_f64(&powi(1.5, 2)), 2.25);
        assert_eq!(to_f64(&powi(0.5, 0)), 1.0);
    }
}
