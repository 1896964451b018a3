use super::poly1d::Polynomial1D;
use super::real::{binomial_row, powi, real, to_f64, zero, Real};
use crate::error::{Error, Result};
use crate::kernel::Kernel;

/// The convolution map `T_eps(p) = p * phi_eps` restricted to polynomials of
/// degree at most `max_degree`, stored as its matrix in the power basis.
///
/// Column `j` holds the coefficients of `T_eps(x^j)`:
/// `(x - y)^j` integrated against `phi_eps` gives
/// `sum_k C(j, k) (-1)^k c_k eps^k x^(j-k)`, so the entry at row `j - k` is
/// `C(j, k) (-1)^k c_k eps^k`. For even kernels only even `k` contribute,
/// the diagonal is exactly 1 and the first super-diagonal exactly 0.
#[derive(Debug, Clone)]
pub struct ConvOperator {
    kernel: Kernel,
    epsilon: f64,
    max_degree: usize,
    /// `columns[j][i]` = coefficient of `x^i` in `T_eps(x^j)`, for `i <= j`.
    columns: Vec<Vec<Real>>,
}

impl ConvOperator {
    pub fn new(kernel: &Kernel, epsilon: f64, max_degree: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
        }
        let moments = kernel.moments(max_degree)?;
        let even = kernel.is_even();
        // c_k eps^k with the (-1)^k of (x - y)^k folded in.
        let weights: Vec<Real> = moments
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
                if even && k % 2 == 1 {
                    zero()
                } else {
                    powi(epsilon, k as u32) * real(sign * c)
                }
            })
            .collect();
        let columns = (0..=max_degree)
            .map(|j| {
                let binom = binomial_row(j);
                let mut col = vec![zero(); j + 1];
                for k in 0..=j {
                    if k == 0 {
                        // c_0 = 1 by normalization; keep the diagonal exact.
                        col[j] = real(1.0);
                    } else if !weights[k].is_zero() {
                        col[j - k] = Real::with_val(weights[k].prec(), &binom[k] * &weights[k]);
                    }
                }
                col
            })
            .collect();
        Ok(ConvOperator {
            kernel: kernel.clone(),
            epsilon,
            max_degree,
            columns,
        })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    /// Matrix entry: coefficient of `x^row` in `T_eps(x^col)`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.columns.get(col).and_then(|c| c.get(row)).map_or(0.0, to_f64)
    }

    fn check_degree(&self, p: &Polynomial1D) -> Result<()> {
        if p.degree() > self.max_degree {
            return Err(Error::invalid(format!(
                "polynomial degree {} exceeds operator degree {}",
                p.degree(),
                self.max_degree
            )));
        }
        Ok(())
    }

    fn apply(&self, p: &Polynomial1D) -> Polynomial1D {
        let a = p.coeffs();
        let mut out = vec![zero(); a.len()];
        for (j, aj) in a.iter().enumerate() {
            if aj.is_zero() {
                continue;
            }
            for (i, m) in self.columns[j].iter().enumerate() {
                if !m.is_zero() {
                    out[i] += m * aj;
                }
            }
        }
        Polynomial1D::from_reals(out)
    }

    /// `T_eps(p)`: the matrix-vector product with the coefficient vector of `p`.
    pub fn convolve(&self, p: &Polynomial1D) -> Result<Polynomial1D> {
        self.check_degree(p)?;
        Ok(self.apply(p))
    }

    /// `p - T_eps(p)`, the action of `id - T_eps`.
    pub fn complement(&self, p: &Polynomial1D) -> Result<Polynomial1D> {
        Ok(p - &self.convolve(p)?)
    }

    /// `T_eps^k(p)` by `k` successive applications.
    pub fn iterate(&self, p: &Polynomial1D, k: usize) -> Result<Polynomial1D> {
        self.check_degree(p)?;
        let mut out = p.clone();
        for _ in 0..k {
            out = self.apply(&out);
        }
        Ok(out)
    }

    /// The side polynomial `p_j`, defined by `p_0 = p` and
    /// `T_eps(p_j) = p_j + p_{j+1}`; equivalently
    /// `p_j = sum_k (-1)^k C(j, k) T_eps^(j-k)(p)`.
    pub fn side_polynomial(&self, p: &Polynomial1D, j: usize) -> Result<Polynomial1D> {
        self.check_degree(p)?;
        if p.is_zero() {
            return Err(Error::invalid(
                "side polynomials of the zero polynomial are not defined",
            ));
        }
        if j >= 1 && p.degree() < 2 {
            return Err(Error::invalid("side polynomials with j >= 1 need degree >= 2"));
        }
        let mut side = p.clone();
        for _ in 0..j {
            side = &self.apply(&side) - &side;
        }
        Ok(side)
    }

    /// `T_eps^{-1}(q)` for even kernels.
    ///
    /// Uses `T^{-1} = sum_{j=0}^{h} (id - T)^j` with `h = floor(deg q / 2)`,
    /// exact on polynomials of degree `<= 2h + 1` because `(id - T)` lowers
    /// degree by two. Evaluated as `x <- q + (x - T x)`, which needs `h`
    /// applications of `T`.
    pub fn invert(&self, q: &Polynomial1D) -> Result<Polynomial1D> {
        if !self.kernel.is_even() {
            return Err(Error::invalid(
                "polynomial inversion requires an even kernel; general kernels are not supported",
            ));
        }
        self.check_degree(q)?;
        let depth = q.degree() / 2;
        let mut x = q.clone();
        for _ in 0..depth {
            let tx = self.apply(&x);
            x = &(&x - &tx) + q;
        }
        Ok(x)
    }
}
