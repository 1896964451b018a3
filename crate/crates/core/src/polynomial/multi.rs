use std::collections::BTreeMap;

use super::real::{binomial_row, powi, real, to_f64, zero, Real};
use crate::error::{Error, Result};
use crate::kernel::Kernel;

pub const MAX_DIM: usize = 3;

/// Polynomial in up to three variables, `sum_alpha a_alpha x^alpha`.
/// Multi-indices all have length `dim`; zero coefficients are not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPolynomial {
    dim: usize,
    terms: BTreeMap<Vec<u32>, Real>,
}

fn check_dim(dim: usize) -> Result<()> {
    if (1..=MAX_DIM).contains(&dim) {
        Ok(())
    } else {
        Err(Error::invalid(format!("dimension must be 1, 2 or 3, got {dim}")))
    }
}

impl MultiPolynomial {
    pub fn zero(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(MultiPolynomial {
            dim,
            terms: BTreeMap::new(),
        })
    }

    /// Sums the given `(alpha, coeff)` pairs; repeated multi-indices accumulate.
    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, f64)>,
    {
        let mut p = Self::zero(dim)?;
        for (alpha, coeff) in terms {
            p.add_term(alpha, real(coeff))?;
        }
        Ok(p)
    }

    pub fn add_term(&mut self, alpha: Vec<u32>, coeff: Real) -> Result<()> {
        if alpha.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "multi-index {alpha:?} does not have length {}",
                self.dim
            )));
        }
        let slot = self.terms.entry(alpha).or_insert_with(zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.retain(|_, c| !c.is_zero());
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `|alpha|` over stored terms.
    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|a| a.iter().map(|&e| e as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn coeff(&self, alpha: &[u32]) -> f64 {
        self.terms.get(alpha).map_or(0.0, to_f64)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32], f64)> {
        self.terms.iter().map(|(a, c)| (a.as_slice(), to_f64(c)))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!(
                "point has {} coordinates, expected {}",
                x.len(),
                self.dim
            )));
        }
        let mut acc = zero();
        for (alpha, c) in &self.terms {
            let mut term = c.clone();
            for (xi, &e) in x.iter().zip(alpha) {
                term *= powi(*xi, e);
            }
            acc += term;
        }
        Ok(to_f64(&acc))
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| to_f64(c).abs()).fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::invalid("polynomials of different dimension"));
        }
        let mut out = self.clone();
        for (alpha, c) in &other.terms {
            out.add_term(alpha.clone(), Real::with_val(c.prec(), c * sign))?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    /// `max |a_alpha - b_alpha| / max |b_alpha|`.
    pub fn relative_error(&self, reference: &Self) -> Result<f64> {
        let diff = self.sub(reference)?.max_abs();
        let scale = reference.max_abs();
        Ok(if scale > 0.0 { diff / scale } else { diff })
    }
}

/// Convolution with the separable kernel `phi_eps(x) = prod_i phi_eps(x_i)`
/// built from an even 1-D kernel. Mixed moments factor as
/// `∫ y^gamma phi_eps(y) dy = prod_i c_{gamma_i} eps^{gamma_i}`.
#[derive(Debug, Clone)]
pub struct SeparableConv {
    kernel: Kernel,
    epsilon: f64,
    max_degree: usize,
    /// `c_k eps^k` for k <= max_degree.
    weights: Vec<Real>,
    binomials: Vec<Vec<Real>>,
}

impl SeparableConv {
    pub fn new(kernel: &Kernel, epsilon: f64, max_degree: usize) -> Result<Self> {
        if !kernel.is_even() {
            return Err(Error::invalid("multivariate convolution requires an even kernel"));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        let weights = kernel
            .moments(max_degree)?
            .iter()
            .enumerate()
            .map(|(k, &c)| powi(epsilon, k as u32) * real(c))
            .collect();
        let binomials = (0..=max_degree).map(binomial_row).collect();
        Ok(SeparableConv {
            kernel: kernel.clone(),
            epsilon,
            max_degree,
            weights,
            binomials,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    fn check(&self, p: &MultiPolynomial) -> Result<()> {
        check_dim(p.dim)?;
        let worst = p.terms.keys().flat_map(|a| a.iter()).copied().max().unwrap_or(0) as usize;
        if worst > self.max_degree || p.total_degree() > self.max_degree {
            return Err(Error::invalid(format!(
                "polynomial degree {} exceeds operator degree {}",
                p.total_degree(),
                self.max_degree
            )));
        }
        Ok(())
    }

    fn apply(&self, p: &MultiPolynomial) -> MultiPolynomial {
        let mut out = MultiPolynomial {
            dim: p.dim,
            terms: BTreeMap::new(),
        };
        for (alpha, a) in &p.terms {
            // Per axis: the surviving exponents beta_i and their factor
            // C(alpha_i, beta_i) c_{alpha_i - beta_i} eps^{alpha_i - beta_i}.
            let axes: Vec<Vec<(u32, Real)>> = alpha
                .iter()
                .map(|&ai| {
                    let ai = ai as usize;
                    (0..=ai)
                        .filter(|k| k % 2 == 0)
                        .map(|k| {
                            let f = Real::with_val(a.prec(), &self.binomials[ai][k] * &self.weights[k]);
                            ((ai - k) as u32, f)
                        })
                        .collect()
                })
                .collect();
            let mut partial: Vec<(Vec<u32>, Real)> = vec![(Vec::with_capacity(p.dim), a.clone())];
            for axis in &axes {
                partial = partial
                    .iter()
                    .flat_map(|(beta, c)| {
                        axis.iter().map(move |(e, f)| {
                            let mut b = beta.clone();
                            b.push(*e);
                            (b, Real::with_val(c.prec(), c * f))
                        })
                    })
                    .collect();
            }
            for (beta, c) in partial {
                *out.terms.entry(beta).or_insert_with(zero) += c;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    /// `p * phi_eps`. Polynomials of total degree <= 1 are returned unchanged.
    pub fn convolve(&self, p: &MultiPolynomial) -> Result<MultiPolynomial> {
        self.check(p)?;
        Ok(self.apply(p))
    }

    /// Inverse by the truncated series `sum_{j <= n/2} (id - T)^j` over the
    /// total degree n, the same recursion as the univariate inverse.
    pub fn invert(&self, q: &MultiPolynomial) -> Result<MultiPolynomial> {
        self.check(q)?;
        let depth = q.total_degree() / 2;
        let mut x = q.clone();
        for _ in 0..depth {
            let tx = self.apply(&x);
            x = x.sub(&tx)?.add(q)?;
        }
        Ok(x)
    }
}
