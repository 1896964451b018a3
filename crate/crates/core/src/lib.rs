//! Convolution with unit-mass kernels and its inversion, for polynomials
//! (exactly, via moments) and for sampled signals (via a truncated series).

pub mod deconvolution;
pub mod error;
pub mod fft;
pub mod grid_signal;
pub mod kernel;
pub mod polynomial;
pub mod quadrature;

pub use deconvolution::{
    gaussian_noise, inverse_operator, make_sinc_filter, recover_with_filter, snr, spectral_factor, DeconvConfig,
    DeconvReport, FilterStage,
};
pub use error::{Error, Result};
pub use grid_signal::{convolve_signal, dft, discretize_kernel, idft, sample_function, GridSignal, Spectrum, Taps};
pub use kernel::{AdmissibilityReport, Kernel, KernelFamily, Parity};
pub use polynomial::{ConvOperator, MultiPolynomial, Polynomial1D, SeparableConv};
