//! Observation weighting by whitening.
//!
//! Weighted least squares is reduced to the unweighted problem once per fit:
//! with noise covariance `C = L L^T`, the whitened residual `L^-1 r` and
//! Jacobian `L^-1 J` feed the ordinary machinery and minimize
//! `1/2 r^T C^-1 r` without ever forming `C^-1`. Per-point standard
//! deviations are the important special case: whitening collapses to row
//! scaling by precomputed reciprocals, no factorization involved.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, CholeskyFactor, Matrix};

/// Dense covariance whitening refuses above this side length unless the
/// caller raises the cap; storage is O(v^2) and honesty about that beats a
/// silent multi-gigabyte allocation.
pub const DEFAULT_COVARIANCE_LIMIT: usize = 10_000;

/// How observations are weighted.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    /// All observations weighted equally.
    Unweighted,
    /// Per-point standard deviations `sigma_i` (length v, strictly positive).
    Diagonal(Vec<f64>),
    /// Dense noise covariance (v x v, symmetric positive definite).
    Covariance(Matrix),
}

#[derive(Debug, Clone)]
enum Kind {
    Identity,
    /// Precomputed `1 / sigma_i`.
    Reciprocal(Vec<f64>),
    /// Cholesky factor of the covariance.
    Triangular(CholeskyFactor),
}

/// Prepared whitening transform; built once per fit, applied every
/// evaluation.
#[derive(Debug, Clone)]
pub struct Whitener {
    kind: Kind,
    v: usize,
}

impl Whitener {
    /// Validates the spec against `v` data points and does any one-time work
    /// (reciprocals, Cholesky factorization).
    pub fn prepare(spec: &WeightSpec, v: usize) -> Result<Self> {
        Self::prepare_with_limit(spec, v, DEFAULT_COVARIANCE_LIMIT)
    }

    /// As [`prepare`](Self::prepare) with an explicit dense-covariance cap.
    pub fn prepare_with_limit(spec: &WeightSpec, v: usize, limit: usize) -> Result<Self> {
        let kind = match spec {
            WeightSpec::Unweighted => Kind::Identity,
            WeightSpec::Diagonal(sigmas) => {
                if sigmas.len() != v {
                    return Err(Error::WeightLengthMismatch {
                        weights: sigmas.len(),
                        points: v,
                    });
                }
                if sigmas.iter().any(|s| !s.is_finite() || *s <= 0.0) {
                    return Err(Error::InvalidWeights {
                        reason: "standard deviations must be finite and positive",
                    });
                }
                Kind::Reciprocal(sigmas.iter().map(|s| 1.0 / s).collect())
            }
            WeightSpec::Covariance(c) => {
                if c.rows() != c.cols() {
                    return Err(Error::InvalidWeights {
                        reason: "covariance must be square",
                    });
                }
                if c.rows() != v {
                    return Err(Error::WeightLengthMismatch {
                        weights: c.rows(),
                        points: v,
                    });
                }
                if c.rows() > limit {
                    return Err(Error::CovarianceTooLarge {
                        v: c.rows(),
                        limit,
                    });
                }
                for i in 0..c.rows() {
                    for j in (i + 1)..c.cols() {
                        let (a, b) = (c[(i, j)], c[(j, i)]);
                        if !a.is_finite() || !b.is_finite() {
                            return Err(Error::InvalidWeights {
                                reason: "covariance entries must be finite",
                            });
                        }
                        if (a - b).abs() > 1e-12 * a.abs().max(b.abs()).max(1.0) {
                            return Err(Error::InvalidWeights {
                                reason: "covariance is not symmetric",
                            });
                        }
                    }
                }
                Kind::Triangular(cholesky(c)?)
            }
        };
        Ok(Whitener { kind, v })
    }

    /// True when whitening is a per-row operation, which is what padded
    /// (masked) data requires; dense covariance couples rows and is not
    /// defined over padding.
    pub fn row_local(&self) -> bool {
        !matches!(self.kind, Kind::Triangular(_))
    }

    /// Whitens a residual vector in place.
    ///
    /// The vector may be longer than `v` (padded); rows past the real prefix
    /// belong to the mask and are left untouched (they are exact zeros, and
    /// a dummy row's nominal sigma is 1).
    pub fn whiten_residuals(&self, r: &mut [f64]) -> Result<()> {
        match &self.kind {
            Kind::Identity => Ok(()),
            Kind::Reciprocal(w) => {
                debug_assert!(r.len() >= self.v);
                for (ri, wi) in r.iter_mut().zip(w) {
                    *ri *= wi;
                }
                Ok(())
            }
            Kind::Triangular(f) => {
                if r.len() != self.v {
                    return Err(Error::CovarianceWithPadding);
                }
                let y = f.forward_substitute(r)?;
                r.copy_from_slice(&y);
                Ok(())
            }
        }
    }

    /// Whitens a Jacobian in place (rows follow the residual convention).
    pub fn whiten_jacobian(&self, j: &mut Matrix) -> Result<()> {
        match &self.kind {
            Kind::Identity => Ok(()),
            Kind::Reciprocal(w) => {
                debug_assert!(j.rows() >= self.v);
                for (i, wi) in w.iter().enumerate() {
                    for x in j.row_mut(i) {
                        *x *= wi;
                    }
                }
                Ok(())
            }
            Kind::Triangular(f) => {
                if j.rows() != self.v {
                    return Err(Error::CovarianceWithPadding);
                }
                let y = f.forward_substitute_mat(j)?;
                *j = y;
                Ok(())
            }
        }
    }
}
