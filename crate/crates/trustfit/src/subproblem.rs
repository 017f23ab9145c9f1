//! Levenberg-Marquardt subproblem: step length control on the trust-region
//! boundary.
//!
//! Everything here works in the factored space of the scaled Jacobian. With
//! `J = U S V^T` and `c = U^T r`, the shifted normal equations
//! `(J^T J + alpha I) p = -J^T r` diagonalize to per-component coefficients
//! `-s_i c_i / (s_i^2 + alpha)`, so evaluating a candidate step for any
//! `alpha` costs O(n^2) and the Gram matrix is never formed.
//!
//! The boundary equation `phi(alpha) = ||p(alpha)|| - Delta = 0` is solved by
//! a scaled Newton iteration safeguarded by running lower/upper bounds; the
//! scaling makes the iteration converge from below without overshoot, and
//! the bounds catch the rare step that escapes the bracket.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{norm2, rank_threshold, svd, Matrix};

/// Relative slack allowed on the boundary: the iteration stops once
/// `| ||p|| - Delta | <= BOUNDARY_ACCURACY * Delta`.
pub const BOUNDARY_ACCURACY: f64 = 0.01;

/// Default cap on boundary iterations; past it the best candidate so far is
/// returned flagged as degraded rather than failing the whole fit.
pub const MAX_BOUNDARY_ITERATIONS: usize = 10;

/// SVD factors of the scaled Jacobian, pre-applied to the residual.
///
/// Holds the singular values (descending), the right factor `V`, and the
/// projected residual `c = U^T r`. The left factor is discarded as soon as
/// `c` is formed; nothing downstream needs more than its action on `r`.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    sigma: Vec<f64>,
    v: Matrix,
    utr: Vec<f64>,
}

impl SvdFactors {
    /// Factors `j` (rows >= cols) and projects `r` through `U^T`.
    pub fn new(j: &Matrix, r: &[f64]) -> Result<Self> {
        if r.len() != j.rows() {
            return Err(Error::DimensionMismatch {
                context: "residual length does not match jacobian rows",
            });
        }
        let f = svd(j)?;
        let utr = f.u.matvec_t(r);
        Ok(SvdFactors {
            sigma: f.sigma,
            v: f.v,
            utr,
        })
    }

    /// Assembles factors directly; for tests that construct exact
    /// decompositions. `sigma` must be descending and non-negative.
    pub fn from_parts(sigma: Vec<f64>, v: Matrix, utr: Vec<f64>) -> Result<Self> {
        let n = sigma.len();
        if v.rows() != n || v.cols() != n || utr.len() != n {
            return Err(Error::DimensionMismatch {
                context: "svd factor shapes disagree",
            });
        }
        if sigma.windows(2).any(|w| w[0] < w[1]) || sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::DimensionMismatch {
                context: "singular values must be non-negative and descending",
            });
        }
        Ok(SvdFactors { sigma, v, utr })
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v(&self) -> &Matrix {
        &self.v
    }

    pub fn utr(&self) -> &[f64] {
        &self.utr
    }

    /// Norm of the scaled gradient `g = V S^T c` (equals `||S^T c||`).
    pub fn gradient_norm(&self) -> f64 {
        let mut acc = 0.0;
        for (s, c) in self.sigma.iter().zip(&self.utr) {
            let t = s * c;
            acc += t * t;
        }
        Float::sqrt(acc)
    }

    /// The scaled gradient itself, `g = V S^T c`.
    pub fn gradient(&self) -> Vec<f64> {
        let n = self.n();
        let mut t = Vec::with_capacity(n);
        for i in 0..n {
            t.push(self.sigma[i] * self.utr[i]);
        }
        self.v.matvec(&t)
    }

    /// Per-component coefficients `t_i = s_i c_i / (s_i^2 + alpha)` with rank
    /// truncation at `alpha = 0`.
    fn coefficients(&self, alpha: f64) -> Vec<f64> {
        let n = self.n();
        let mut t = Vec::with_capacity(n);
        if alpha == 0.0 {
            let cut = rank_threshold(self.sigma.first().copied().unwrap_or(0.0));
            for i in 0..n {
                let s = self.sigma[i];
                t.push(if s > cut { self.utr[i] / s } else { 0.0 });
            }
        } else {
            for i in 0..n {
                let s = self.sigma[i];
                t.push(s * self.utr[i] / (s * s + alpha));
            }
        }
        t
    }

    /// True when some direction is rank-deficient, i.e. the unshifted solve
    /// had to drop components.
    fn rank_deficient(&self) -> bool {
        let cut = rank_threshold(self.sigma.first().copied().unwrap_or(0.0));
        self.sigma.iter().any(|&s| s <= cut)
    }
}

/// Solves `(J^T J + alpha I) p = -J^T r` through the factors.
///
/// At `alpha = 0` this is the Gauss-Newton step; components whose singular
/// value sits below the published rank threshold are dropped, which yields
/// the minimum-norm solution on rank-deficient Jacobians.
pub fn solve_shifted(factors: &SvdFactors, alpha: f64) -> Vec<f64> {
    let t = factors.coefficients(alpha);
    let mut p = factors.v.matvec(&t);
    for v in p.iter_mut() {
        *v = -*v;
    }
    p
}

/// Boundary function `phi(alpha) = ||p(alpha)|| - Delta` and its derivative.
///
/// The derivative has the closed form
/// `phi'(alpha) = -[sum s_i^2 c_i^2 / (s_i^2 + alpha)^3] / ||p(alpha)||`,
/// strictly negative whenever the step is nonzero, so `phi` decreases
/// monotonically toward `-Delta`.
pub fn phi_and_derivative(factors: &SvdFactors, delta: f64, alpha: f64) -> (f64, f64) {
    let t = factors.coefficients(alpha);
    let p_norm = norm2(&t); // V is orthogonal: ||V t|| = ||t||
    if p_norm == 0.0 {
        return (-delta, 0.0);
    }
    let cut = rank_threshold(factors.sigma.first().copied().unwrap_or(0.0));
    let mut acc = 0.0;
    for (i, &s) in factors.sigma.iter().enumerate() {
        if alpha == 0.0 && s <= cut {
            continue;
        }
        let sc = s * factors.utr[i];
        let d = s * s + alpha;
        acc += (sc * sc) / (d * d * d);
    }
    (p_norm - delta, -acc / p_norm)
}

/// Norm of the shifted-system residual `(J^T J + alpha I) p + J^T r`,
/// evaluated through the factors. Diagnostic used by the optimality tests.
pub fn shifted_residual_norm(factors: &SvdFactors, alpha: f64, p: &[f64]) -> f64 {
    let tv = factors.v.matvec_t(p); // V^T p
    let mut acc = 0.0;
    for ((s, c), t) in factors.sigma.iter().zip(&factors.utr).zip(&tv) {
        let resid = (s * s + alpha) * t + s * c;
        acc += resid * resid;
    }
    Float::sqrt(acc)
}

/// Result of the boundary search.
#[derive(Debug, Clone)]
pub struct StepSolution {
    /// The step `p(alpha)`.
    pub p: Vec<f64>,
    /// The shift that produced it.
    pub alpha: f64,
    /// Boundary iterations spent.
    pub iterations: usize,
    /// `| ||p|| - Delta | <= BOUNDARY_ACCURACY * Delta` held at return.
    pub on_boundary: bool,
    /// True when the iteration cap expired before reaching the boundary
    /// tolerance; `p` is the best candidate seen.
    pub degraded: bool,
}

/// Tuning for [`solve_lm_parameter`]; the defaults are what the solver uses.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryOptions {
    /// Relative boundary slack (`sigma` in the update formula's stop rule).
    pub accuracy: f64,
    /// Iteration cap; expiry degrades gracefully instead of erroring.
    pub max_iterations: usize,
}

impl Default for BoundaryOptions {
    fn default() -> Self {
        BoundaryOptions {
            accuracy: BOUNDARY_ACCURACY,
            max_iterations: MAX_BOUNDARY_ITERATIONS,
        }
    }
}

/// Internal state of the safeguarded boundary iteration.
///
/// Invariants while iterating: `0 <= lower`, `lower <= upper` once both are
/// informed, and the safeguard forces every accepted `alpha` into
/// `[lower, upper]`.
#[derive(Debug, Clone, Copy)]
struct BoundaryState {
    alpha: f64,
    lower: f64,
    upper: f64,
    phi: f64,
    dphi: f64,
}

/// Finds `alpha > 0` placing `||p(alpha)||` on the trust-region boundary.
///
/// Caller guarantees the unshifted step overflows the radius
/// (`||p(0)|| > Delta`). Starts from `alpha = 0` unless the Jacobian is rank
/// deficient there (where `phi'` is not informative) in which case it starts
/// from a small positive fraction of the upper bound. Each iteration applies
/// the scaled Newton update
///
/// ```text
/// alpha_next = alpha - ((phi + Delta) / Delta) * (phi / phi')
/// ```
///
/// clipped into the running bracket `[lower, upper]`; out-of-bracket
/// proposals fall back to `max(0.001 * upper, sqrt(lower * upper))`. The
/// bracket then tightens: the plain Newton point is a lower bound (phi is
/// convex and decreasing), and any `alpha` with `phi < 0` is an upper bound.
pub fn solve_lm_parameter(
    factors: &SvdFactors,
    delta: f64,
    options: &BoundaryOptions,
) -> StepSolution {
    debug_assert!(delta > 0.0);
    let tol = options.accuracy * delta;
    let upper0 = factors.gradient_norm() / delta;

    let alpha0 = if factors.rank_deficient() {
        0.001 * upper0
    } else {
        0.0
    };
    let (phi0, dphi0) = phi_and_derivative(factors, delta, alpha0);

    let mut st = BoundaryState {
        alpha: alpha0,
        lower: if dphi0 < 0.0 {
            Float::max(0.0, alpha0 - phi0 / dphi0)
        } else {
            0.0
        },
        upper: upper0,
        phi: phi0,
        dphi: dphi0,
    };

    let mut best_alpha = st.alpha;
    let mut best_phi = st.phi;
    let mut iterations = 0;

    loop {
        // Converged: on the boundary, or inside it at alpha = 0 (the
        // complementarity condition allows alpha = 0 only with ||p|| <= Delta).
        if st.phi.abs() <= tol && (st.alpha > 0.0 || st.phi <= 0.0) {
            best_alpha = st.alpha;
            break;
        }
        if iterations >= options.max_iterations {
            return finish(factors, delta, tol, best_alpha, iterations, true);
        }
        iterations += 1;

        // Scaled Newton proposal, safeguarded against the current bracket.
        let proposal = if st.dphi < 0.0 {
            st.alpha - ((st.phi + delta) / delta) * (st.phi / st.dphi)
        } else {
            f64::NAN // force the fallback
        };
        let next = if proposal.is_finite() && proposal >= st.lower && proposal <= st.upper {
            proposal
        } else {
            Float::max(0.001 * st.upper, Float::sqrt(st.lower * st.upper))
        };

        // Bracket update uses phi at the *current* alpha before moving on.
        if st.dphi < 0.0 {
            st.lower = Float::max(st.lower, st.alpha - st.phi / st.dphi);
        }
        if st.phi < 0.0 {
            st.upper = st.alpha;
        }
        debug_assert!(st.lower >= 0.0);

        st.alpha = next;
        let (phi, dphi) = phi_and_derivative(factors, delta, st.alpha);
        st.phi = phi;
        st.dphi = dphi;

        if phi.abs() < best_phi.abs() {
            best_phi = phi;
            best_alpha = st.alpha;
        }
    }

    finish(factors, delta, tol, best_alpha, iterations, false)
}

fn finish(
    factors: &SvdFactors,
    delta: f64,
    tol: f64,
    alpha: f64,
    iterations: usize,
    degraded: bool,
) -> StepSolution {
    let p = solve_shifted(factors, alpha);
    let on_boundary = (norm2(&p) - delta).abs() <= tol;
    StepSolution {
        p,
        alpha,
        iterations,
        on_boundary,
        degraded: degraded && !on_boundary,
    }
}
