//! Discrete Fourier transforms on top of `rustfft`.
//!
//! Forward transforms are unnormalized (`X_k = sum_j x_j e^{-2 pi i jk/N}`);
//! inverse transforms carry the `1/N`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward and inverse plans for one transform length. Neither direction scales.
#[derive(Clone)]
pub struct Plan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plan").field("len", &self.len()).finish()
    }
}

impl Plan {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Plan {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.forward.process(data);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.inverse.process(data);
    }
}

/// Unnormalized forward DFT of any length.
pub fn forward(input: &[Complex64]) -> Vec<Complex64> {
    let mut data = input.to_vec();
    if !data.is_empty() {
        Plan::new(data.len()).forward_in_place(&mut data);
    }
    data
}

/// Inverse DFT including the `1/N` factor.
pub fn inverse(input: &[Complex64]) -> Vec<Complex64> {
    let mut data = input.to_vec();
    if !data.is_empty() {
        Plan::new(data.len()).inverse_in_place(&mut data);
    }
    let n = data.len().max(1) as f64;
    data.into_iter().map(|z| z / n).collect()
}

pub fn forward_real(input: &[f64]) -> Vec<Complex64> {
    let data: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    forward(&data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive(input: &[Complex64]) -> Vec<Complex64> {
        let n = input.len();
        (0..n)
            .map(|k| {
                input
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let angle = -2.0 * PI * ((j * k) % n) as f64 / n as f64;
                        x * Complex64::from_polar(1.0, angle)
                    })
                    .sum()
            })
            .collect()
    }

    fn signal(n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let t = i as f64;
                Complex64::new((0.37 * t).sin() + 0.1 * (t * t * 0.01).cos(), (0.11 * t).cos())
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        for n in [1, 2, 3, 5, 8, 12, 64, 100, 127, 256] {
            let x = signal(n);
            let fast = forward(&x);
            let slow = naive(&x);
            let scale = slow.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).norm() < 1e-11 * scale, "n = {n}");
            }
        }
    }

    #[test]
    fn round_trip() {
        for n in [7, 1000, 1024] {
            let x = signal(n);
            let back = inverse(&forward(&x));
            for (a, b) in back.iter().zip(&x) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn constant_has_only_dc() {
        let x = vec![Complex64::new(2.5, 0.0); 16];
        let f = forward(&x);
        assert!((f[0] - Complex64::new(40.0, 0.0)).norm() < 1e-12);
        assert!(f[1..].iter().all(|z| z.norm() < 1e-12));
    }
}
