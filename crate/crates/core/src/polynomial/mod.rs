//! Convolution of polynomials with even kernels and its exact inverse.
//!
//! For an even unit-mass kernel, `T_eps(p) = p * phi_eps` maps polynomials
//! of degree n to polynomials of degree n with the same two leading
//! coefficients, fixes affine functions, and is invertible on every such
//! space because `id - T_eps` lowers degree by two.

mod format;
mod multi;
mod operator;
mod poly1d;
pub mod real;

pub use format::{parse_polynomial, AnyPolynomial, PolynomialDoc, TermDoc};
pub use multi::{MultiPolynomial, SeparableConv, MAX_DIM};
pub use operator::ConvOperator;
pub use poly1d::{Polynomial1D, TRIM_THRESHOLD};
