//! Model abstraction, fit data, and residual/Jacobian evaluation.
//!
//! A [`Model`] is a single generic function `h(y, x)`: write it once over the
//! [`Scalar`] trait and it serves both plain evaluation (`S = f64`) and
//! derivative evaluation (`S = DualScalar`). The Jacobian of the residual
//! vector `r_i = h(y_i, x) - z_i` with respect to `x` falls out of one dual
//! sweep per data point; no per-model derivative code exists anywhere.

use alloc::vec::Vec;

use crate::dual::{DualScalar, Scalar};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A parameterized scalar model `h(y, x)`.
///
/// `point` is one independent-variable location (a slice so models over
/// scalars and models over coordinate tuples share one shape), `params` is
/// the full parameter vector. The definition must be generic over [`Scalar`];
/// that single definition is what guarantees the value path and the
/// derivative path cannot drift apart.
pub trait Model {
    /// Number of fit parameters.
    fn arity(&self) -> usize;
    /// Length of one independent-variable point (1 for curves, 2 for images).
    fn point_dim(&self) -> usize;
    /// Evaluates the model at one point.
    fn eval<S: Scalar>(&self, point: &[f64], params: &[S]) -> S;
}

/// Read access to (possibly padded) fit data.
///
/// Implemented by [`Dataset`] and by
/// [`MaskedDataset`](crate::padding::MaskedDataset). Real rows always form
/// the prefix `0..real_points()`; evaluation routines zero everything after.
pub trait FitData {
    /// Length of one point.
    fn point_dim(&self) -> usize;
    /// Total rows including padding.
    fn rows(&self) -> usize;
    /// Number of real (unmasked) data points.
    fn real_points(&self) -> usize;
    /// Independent variables of row `i`.
    fn point(&self, i: usize) -> &[f64];
    /// Observed value of row `i`.
    fn observed(&self, i: usize) -> f64;
    /// Whether row `i` is a real observation (false for padding).
    fn is_real(&self, i: usize) -> bool;
}

/// Observed data for one fit: `v` points `y_i` with observed values `z_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    ydim: usize,
    y: Vec<f64>,
    z: Vec<f64>,
}

impl Dataset {
    /// Dataset over scalar points.
    pub fn new(y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        Self::with_dim(1, y, z)
    }

    /// Dataset over `ydim`-dimensional points; `y` is row-major
    /// (`y[i * ydim..(i + 1) * ydim]` is point `i`).
    pub fn with_dim(ydim: usize, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        if ydim == 0 {
            return Err(Error::DimensionMismatch {
                context: "point dimension must be at least 1",
            });
        }
        if y.len() != z.len() * ydim {
            return Err(Error::DataLengthMismatch {
                y_len: y.len() / ydim,
                z_len: z.len(),
            });
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData {
                field: "y",
                index: i / ydim,
            });
        }
        if let Some(i) = z.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteData { field: "z", index: i });
        }
        Ok(Dataset { ydim, y, z })
    }

    /// Square image stored row-major: point `i` is `(row, col)` in pixels.
    pub fn from_image(side: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != side * side {
            return Err(Error::DataLengthMismatch {
                y_len: side * side,
                z_len: pixels.len(),
            });
        }
        let mut y = Vec::with_capacity(2 * pixels.len());
        for row in 0..side {
            for col in 0..side {
                y.push(row as f64);
                y.push(col as f64);
            }
        }
        Self::with_dim(2, y, pixels)
    }

    /// Number of data points.
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn ydim(&self) -> usize {
        self.ydim
    }

    pub(crate) fn y_flat(&self) -> &[f64] {
        &self.y
    }

    pub(crate) fn z_values(&self) -> &[f64] {
        &self.z
    }
}

impl FitData for Dataset {
    fn point_dim(&self) -> usize {
        self.ydim
    }
    fn rows(&self) -> usize {
        self.z.len()
    }
    fn real_points(&self) -> usize {
        self.z.len()
    }
    fn point(&self, i: usize) -> &[f64] {
        &self.y[i * self.ydim..(i + 1) * self.ydim]
    }
    fn observed(&self, i: usize) -> f64 {
        self.z[i]
    }
    fn is_real(&self, _i: usize) -> bool {
        true
    }
}

/// Residual vector `r_i = h(y_i, x) - z_i` over every row of `data`.
///
/// Padded rows come back exactly zero. A non-finite model value at a *real*
/// row is an error naming that row; padded rows may evaluate to anything
/// since the mask erases them.
pub fn eval_residuals<M: Model, D: FitData + ?Sized>(
    model: &M,
    data: &D,
    x: &[f64],
) -> Result<Vec<f64>> {
    debug_assert_eq!(x.len(), model.arity());
    let s = data.rows();
    let mut r = Vec::with_capacity(s);
    for i in 0..s {
        if !data.is_real(i) {
            r.push(0.0);
            continue;
        }
        let h = model.eval::<f64>(data.point(i), x);
        if !h.is_finite() {
            return Err(Error::EvaluationFailure { point: i });
        }
        r.push(h - data.observed(i));
    }
    Ok(r)
}

/// Half the squared residual norm, `f(x) = 1/2 * sum r_i^2`.
pub fn eval_cost(residuals: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &ri in residuals {
        acc += ri * ri;
    }
    0.5 * acc
}

/// Jacobian `J[i][j] = d r_i / d x_j` via one dual sweep per data point.
///
/// Rows of padded slots are exactly zero. Non-finite derivatives at real rows
/// are errors naming the row and the offending parameter.
pub fn eval_jacobian<M: Model, D: FitData + ?Sized>(
    model: &M,
    data: &D,
    x: &[f64],
) -> Result<Matrix> {
    let n = model.arity();
    debug_assert_eq!(x.len(), n);
    let seeded = DualScalar::seed(x);
    let mut j = Matrix::zeros(data.rows(), n);
    for i in 0..data.rows() {
        if !data.is_real(i) {
            continue; // row stays zero
        }
        let h = model.eval::<DualScalar>(data.point(i), &seeded);
        if !h.is_finite(n) {
            return match h.first_bad_slot() {
                Some(parameter) => Err(Error::DerivativeFailure { point: i, parameter }),
                None => Err(Error::EvaluationFailure { point: i }),
            };
        }
        let row = j.row_mut(i);
        for (jj, slot) in row.iter_mut().enumerate() {
            *slot = h.deriv(jj);
        }
    }
    Ok(j)
}

/// Central-difference Jacobian with per-parameter step
/// `h_j = step_scale * max(1, |x_j|)`.
///
/// Exists as an independent cross-check on [`eval_jacobian`]; the solver
/// never calls it.
pub fn eval_jacobian_fd<M: Model, D: FitData + ?Sized>(
    model: &M,
    data: &D,
    x: &[f64],
    step_scale: f64,
) -> Result<Matrix> {
    let n = model.arity();
    let mut j = Matrix::zeros(data.rows(), n);
    let mut xp = x.to_vec();
    for jj in 0..n {
        let h = step_scale * x[jj].abs().max(1.0);
        xp[jj] = x[jj] + h;
        let r_plus = eval_residuals(model, data, &xp)?;
        xp[jj] = x[jj] - h;
        let r_minus = eval_residuals(model, data, &xp)?;
        xp[jj] = x[jj];
        let inv = 1.0 / (2.0 * h);
        for i in 0..data.rows() {
            j[(i, jj)] = (r_plus[i] - r_minus[i]) * inv;
        }
    }
    Ok(j)
}
