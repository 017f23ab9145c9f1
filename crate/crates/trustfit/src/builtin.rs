//! Built-in model catalog.
//!
//! Each model is a zero-state (or near-zero-state) struct implementing
//! [`Model`] with a single generic evaluator, so values and derivatives come
//! from the same arithmetic.

use crate::dual::Scalar;
use crate::model::Model;

/// `h(y; x) = x0 * y + x1` (slope, intercept).
#[derive(Debug, Clone, Copy, Default)]
pub struct Linear;

impl Model for Linear {
    fn arity(&self) -> usize {
        2
    }
    fn point_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, point: &[f64], params: &[S]) -> S {
        params[0].clone() * point[0] + params[1].clone()
    }
}

/// `h(y; x) = x0 * exp(x1 * y) + x2` (amplitude, rate, offset).
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl Model for Exponential {
    fn arity(&self) -> usize {
        3
    }
    fn point_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, point: &[f64], params: &[S]) -> S {
        params[0].clone() * (params[1].clone() * point[0]).exp() + params[2].clone()
    }
}

/// `h(y; x) = x0 + x1*y + ... + xk*y^k`, evaluated by Horner's rule.
///
/// Arity is `degree + 1`; coefficients are ordered constant-first.
#[derive(Debug, Clone, Copy)]
pub struct Polynomial {
    pub degree: usize,
}

impl Model for Polynomial {
    fn arity(&self) -> usize {
        self.degree + 1
    }
    fn point_dim(&self) -> usize {
        1
    }
    fn eval<S: Scalar>(&self, point: &[f64], params: &[S]) -> S {
        let y = point[0];
        let mut acc = params[self.degree].clone();
        for j in (0..self.degree).rev() {
            acc = acc * y + params[j].clone();
        }
        acc
    }
}

/// Rotated elliptical 2-D Gaussian over `(row, col)` pixel coordinates.
///
/// Parameters, in order:
/// `[amplitude, row_center, col_center, sigma_row, sigma_col, theta, offset]`.
///
/// With `dx = row - row_center`, `dy = col - col_center` the surface is
/// `amplitude * exp(-(a*dx^2 + 2b*dx*dy + d*dy^2)) + offset` where
///
/// ```text
/// a = cos^2(theta)/(2 sr^2) + sin^2(theta)/(2 sc^2)
/// b = sin(2 theta) * (1/(4 sc^2) - 1/(4 sr^2))
/// d = sin^2(theta)/(2 sr^2) + cos^2(theta)/(2 sc^2)
/// ```
///
/// The widths enter only through their squares, so the surface is even in
/// both sigmas; `theta` rotates the ellipse axes relative to the grid.
#[derive(Debug, Clone, Copy, Default)]
pub struct Gaussian2d;

impl Model for Gaussian2d {
    fn arity(&self) -> usize {
        7
    }
    fn point_dim(&self) -> usize {
        2
    }
    fn eval<S: Scalar>(&self, point: &[f64], params: &[S]) -> S {
        let (row, col) = (point[0], point[1]);
        let amplitude = params[0].clone();
        let dx = -(params[1].clone() - row);
        let dy = -(params[2].clone() - col);
        let sr2 = params[3].clone() * params[3].clone();
        let sc2 = params[4].clone() * params[4].clone();
        let ct = params[5].clone().cos();
        let st = params[5].clone().sin();

        let a = ct.clone() * ct.clone() / (sr2.clone() * 2.0) + st.clone() * st.clone() / (sc2.clone() * 2.0);
        let b = (params[5].clone() * 2.0).sin() * (S::constant(0.25) / sc2.clone() - S::constant(0.25) / sr2.clone());
        let d = st.clone() * st / (sr2 * 2.0) + ct.clone() * ct / (sc2 * 2.0);

        let q = a * dx.clone() * dx.clone() + b * dx.clone() * dy.clone() * 2.0 + d * dy.clone() * dy;
        amplitude * (-q).exp() + params[6].clone()
    }
}
