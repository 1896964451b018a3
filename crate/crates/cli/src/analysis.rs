//! Spectral peak measurements used by the experiment summaries.

use std::f64::consts::PI;

use deconv_core::Spectrum;
use serde::Serialize;

/// Bins on each side of a peak searched for the noise floor.
pub const FLOOR_HALF_WINDOW: usize = 8;
/// Bins on each side of a peak left out of the floor estimate.
pub const PEAK_EXCLUSION: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakStats {
    /// Angular frequency.
    pub omega: f64,
    pub bin: usize,
    /// Largest magnitude within one bin of `bin`.
    pub peak: f64,
    /// Median magnitude over the surrounding window, peak excluded.
    pub floor: f64,
    pub ratio: f64,
}

/// Index of the non-negative bin nearest to angular frequency `omega`.
pub fn nearest_bin(spectrum: &Spectrum, omega: f64) -> usize {
    let k = (omega / (2.0 * PI) / spectrum.df).round() as usize;
    k.min(spectrum.len() / 2)
}

pub fn peak_stats(spectrum: &Spectrum, omega: f64) -> PeakStats {
    let mags = spectrum.magnitudes();
    let top = spectrum.len() / 2;
    let bin = nearest_bin(spectrum, omega);
    let peak = (bin.saturating_sub(1)..=(bin + 1).min(top))
        .map(|k| mags[k])
        .fold(0.0, f64::max);
    let mut around: Vec<f64> = (bin.saturating_sub(FLOOR_HALF_WINDOW)..=(bin + FLOOR_HALF_WINDOW).min(top))
        .filter(|k| k.abs_diff(bin) > PEAK_EXCLUSION)
        .map(|k| mags[k])
        .collect();
    around.sort_by(f64::total_cmp);
    let floor = match around.len() {
        0 => 0.0,
        n if n % 2 == 1 => around[n / 2],
        n => 0.5 * (around[n / 2 - 1] + around[n / 2]),
    };
    PeakStats {
        omega,
        bin,
        peak,
        floor,
        ratio: if floor > 0.0 { peak / floor } else { f64::INFINITY },
    }
}

/// `| |X_b| / |F_b| - 1 |` at the bin nearest `omega`.
pub fn peak_magnitude_error(reconstructed: &Spectrum, reference: &Spectrum, omega: f64) -> f64 {
    let b = nearest_bin(reference, omega);
    (reconstructed.bins[b].norm() / reference.bins[b].norm() - 1.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use deconv_core::{dft, sample_function};

    #[test]
    fn isolated_tone() {
        let s = sample_function(|t| (3.0 * t).sin(), -50.0, 50.0, 4096).unwrap();
        let sp = dft(&s);
        let stats = peak_stats(&sp, 3.0);
        assert_eq!(stats.bin, nearest_bin(&sp, 3.0));
        assert!(stats.ratio > 10.0);
        let flat = peak_stats(&sp, 10.0);
        assert!(flat.ratio < 5.0);
        assert_eq!(peak_magnitude_error(&sp, &sp, 3.0), 0.0);
    }
}
