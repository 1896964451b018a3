//! JSON forms of polynomials.
//!
//! Univariate polynomials may be written as a plain array `[a_0, ..., a_n]`;
//! any dimension can use `{"dim": d, "terms": [{"alpha": [..], "coeff": r}, ..]}`.
//! Coefficients are written as f64.

use serde::{Deserialize, Serialize};

use super::multi::MultiPolynomial;
use super::poly1d::Polynomial1D;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub alpha: Vec<u32>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PolynomialDoc {
    Coefficients(Vec<f64>),
    Terms { dim: usize, terms: Vec<TermDoc> },
}

/// A parsed polynomial of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyPolynomial {
    Univariate(Polynomial1D),
    Multivariate(MultiPolynomial),
}

impl PolynomialDoc {
    pub fn from_univariate(p: &Polynomial1D) -> Self {
        PolynomialDoc::Coefficients(p.to_f64_vec())
    }

    pub fn from_multivariate(p: &MultiPolynomial) -> Self {
        PolynomialDoc::Terms {
            dim: p.dim(),
            terms: p
                .terms()
                .map(|(a, c)| TermDoc {
                    alpha: a.to_vec(),
                    coeff: c,
                })
                .collect(),
        }
    }

    /// `{"dim": 1, ...}` documents become univariate polynomials.
    pub fn into_polynomial(self) -> Result<AnyPolynomial> {
        match self {
            PolynomialDoc::Coefficients(c) => {
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidInput("non-finite coefficient".into()));
                }
                Ok(AnyPolynomial::Univariate(Polynomial1D::from_f64(&c)))
            }
            PolynomialDoc::Terms { dim, terms } => {
                if terms.iter().any(|t| !t.coeff.is_finite()) {
                    return Err(Error::InvalidInput("non-finite coefficient".into()));
                }
                let p = MultiPolynomial::from_terms(dim, terms.into_iter().map(|t| (t.alpha, t.coeff)))?;
                if dim == 1 {
                    let n = p.total_degree();
                    let mut c = vec![0.0; n + 1];
                    for (alpha, v) in p.terms() {
                        c[alpha[0] as usize] = v;
                    }
                    Ok(AnyPolynomial::Univariate(Polynomial1D::from_f64(&c)))
                } else {
                    Ok(AnyPolynomial::Multivariate(p))
                }
            }
        }
    }
}

pub fn parse_polynomial(json: &str) -> Result<AnyPolynomial> {
    let doc: PolynomialDoc = serde_json::from_str(json)?;
    doc.into_polynomial()
}

impl Polynomial1D {
    /// Plain coefficient-array JSON.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolynomialDoc::from_univariate(self)).expect("serializable")
    }
}

impl MultiPolynomial {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolynomialDoc::from_multivariate(self)).expect("serializable")
    }
}
