//! Trust region driver for nonlinear least squares.
//!
//! Each iteration tries the unshifted Gauss-Newton step first; only when that
//! step overflows the trust radius does the boundary search run. The radius
//! then grows, holds, or shrinks with the gain ratio (agreement between the
//! actual cost drop and the quadratic model's prediction), and a step is kept
//! only if it strictly decreases the cost, so the sequence of accepted costs
//! never rises.
//!
//! Parameters are equilibrated through a diagonal scaling built from running
//! maxima of Jacobian column norms; the trust region is a ball in the scaled
//! space, which keeps the radius meaningful when parameters differ by orders
//! of magnitude.
//!
//! The solver is deterministic: no randomness, no threads, fixed summation
//! order. Identical inputs produce identical results down to the last bit,
//! including the per-iteration traces.

use alloc::vec::Vec;

use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{norm2, norm_inf, Matrix};
use crate::model::{eval_cost, eval_jacobian, eval_residuals, Dataset, FitData, Model};
use crate::padding::pad_and_mask;
use crate::subproblem::{solve_lm_parameter, solve_shifted, BoundaryOptions, SvdFactors};
use crate::weights::{WeightSpec, Whitener};

/// Monotonic time source; only differences of [`now_ns`](Clock::now_ns) are
/// meaningful. The core crate has no clock of its own, so callers that want
/// phase timings inject one (the CLI does); everyone else gets zeros.
pub trait Clock {
    fn now_ns(&self) -> u64;
}

/// The do-nothing clock: all phases report zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn now_ns(&self) -> u64 {
        0
    }
}

/// Wall-clock nanoseconds spent in each phase of a fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseTimings {
    pub residual_ns: u64,
    pub jacobian_ns: u64,
    pub svd_ns: u64,
    pub subproblem_ns: u64,
    pub total_ns: u64,
}

/// Initial trust-region radius rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delta0 {
    /// `||D0 * x0||`, falling back to 1 when the seed is the origin.
    ScaledSeedNorm,
    /// An explicit radius.
    Fixed(f64),
}

/// Solver configuration. The defaults are the working set: tolerances 1e-8,
/// iteration cap `100 * n`, seed-scaled initial radius.
#[derive(Debug, Clone)]
pub struct FitOptions {
    /// Stop when both predicted and actual cost reduction fall below
    /// `ftol * cost`.
    pub ftol: f64,
    /// Stop when the parameter step satisfies `||w|| <= xtol * (xtol + ||x||)`.
    pub xtol: f64,
    /// Stop when the gradient satisfies `||g||_inf <= gtol`.
    pub gtol: f64,
    /// Iteration cap; `None` means `100 * n`.
    pub max_iterations: Option<usize>,
    pub delta0: Delta0,
    /// When set, the dataset is padded to this many rows with masked
    /// duplicates before fitting (see the padding module).
    pub fixed_size: Option<usize>,
    /// Boundary-search tuning; the defaults match the published constants.
    pub boundary: BoundaryOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            ftol: 1e-8,
            xtol: 1e-8,
            gtol: 1e-8,
            max_iterations: None,
            delta0: Delta0::ScaledSeedNorm,
            fixed_size: None,
            boundary: BoundaryOptions::default(),
        }
    }
}

impl FitOptions {
    fn validate(&self) -> Result<()> {
        let positive = |t: f64| t.is_finite() && t > 0.0;
        if !positive(self.ftol) || !positive(self.xtol) || !positive(self.gtol) {
            return Err(Error::InvalidOptions {
                reason: "tolerances must be positive and finite",
            });
        }
        if self.max_iterations == Some(0) {
            return Err(Error::InvalidOptions {
                reason: "iteration cap must allow at least one iteration",
            });
        }
        if let Delta0::Fixed(d) = self.delta0 {
            if !positive(d) {
                return Err(Error::InvalidOptions {
                    reason: "fixed initial radius must be positive and finite",
                });
            }
        }
        if !positive(self.boundary.accuracy) {
            return Err(Error::InvalidOptions {
                reason: "boundary accuracy must be positive and finite",
            });
        }
        Ok(())
    }
}

/// Why the solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    /// Predicted and actual cost reduction both fell below `ftol * cost`.
    ConvergedFtol,
    /// The step became negligible relative to the parameter vector.
    ConvergedXtol,
    /// The gradient infinity-norm fell below `gtol`.
    ConvergedGtol,
    /// Iteration cap reached without satisfying any tolerance.
    MaxIterations,
    /// Evaluation or factorization broke down; the result carries the last
    /// iterate whose evaluation succeeded (the seed, with NaN cost, if the
    /// very first evaluation failed).
    NumericFailure,
}

impl FitStatus {
    pub fn converged(self) -> bool {
        matches!(
            self,
            FitStatus::ConvergedFtol | FitStatus::ConvergedXtol | FitStatus::ConvergedGtol
        )
    }

    /// Stable lowercase name, used verbatim in reports.
    pub fn as_str(self) -> &'static str {
        match self {
            FitStatus::ConvergedFtol => "converged-ftol",
            FitStatus::ConvergedXtol => "converged-xtol",
            FitStatus::ConvergedGtol => "converged-gtol",
            FitStatus::MaxIterations => "max-iterations",
            FitStatus::NumericFailure => "numeric-failure",
        }
    }
}

/// Everything a fit reports back.
///
/// Identical model, data, seed, and options reproduce this struct exactly
/// (bitwise), traces included; nothing time- or thread-dependent lives here.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Best parameter vector found.
    pub x_opt: Vec<f64>,
    /// `1/2 ||r||^2` at `x_opt` (whitened residuals when weighted).
    pub cost: f64,
    /// Whitened residuals at `x_opt`, real rows only (padding excluded).
    pub residuals: Vec<f64>,
    pub status: FitStatus,
    /// Trust-region iterations executed.
    pub iterations: usize,
    /// Residual-vector evaluations (each covers every data point once).
    pub n_model_evals: usize,
    /// Jacobian evaluations.
    pub n_jacobian_evals: usize,
    /// Shift parameter chosen at each iteration (0 for interior steps).
    pub alpha_history: Vec<f64>,
    /// Trust radius in effect at each iteration.
    pub delta_history: Vec<f64>,
    /// Cost at the seed followed by the cost after each accepted step;
    /// non-increasing by construction.
    pub cost_history: Vec<f64>,
}

/// Agreement between actual and predicted cost reduction.
///
/// Returns 0 when the predicted reduction is non-positive or negligible
/// relative to the current cost, which routes the caller into the
/// reject-and-shrink branch instead of dividing by noise.
pub fn gain_ratio(f_old: f64, f_new: f64, predicted: f64) -> f64 {
    // Negated comparison on purpose: a NaN prediction must also clamp to 0.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(predicted > f64::EPSILON * f_old) {
        return 0.0;
    }
    (f_old - f_new) / predicted
}

/// Outcome of the radius update rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateDecision {
    pub accept: bool,
    pub new_delta: f64,
}

/// Radius control: strong agreement doubles the radius, moderate agreement
/// keeps it, and poor agreement rejects the step and shrinks the radius to a
/// quarter of the step length.
pub fn apply_update(gamma: f64, step_norm: f64, delta: f64) -> UpdateDecision {
    if gamma > 0.75 {
        UpdateDecision {
            accept: true,
            new_delta: 2.0 * delta,
        }
    } else if gamma >= 0.25 {
        UpdateDecision {
            accept: true,
            new_delta: delta,
        }
    } else {
        UpdateDecision {
            accept: false,
            new_delta: 0.25 * step_norm,
        }
    }
}

/// Diagonal scaling from running maxima of Jacobian column norms.
///
/// A column that has never been nonzero scales by 1 so the corresponding
/// parameter still moves; once a column norm has been seen, the scale never
/// decreases (the trust region only ever tightens in a direction, never
/// silently loosens).
pub fn compute_scaling(j: &Matrix, previous: Option<&[f64]>) -> Vec<f64> {
    let n = j.cols();
    let mut d = Vec::with_capacity(n);
    for col in 0..n {
        let norm = j.col_norm(col);
        let dj = match previous {
            Some(prev) => Float::max(prev[col], norm),
            None => {
                if norm == 0.0 {
                    1.0
                } else {
                    norm
                }
            }
        };
        d.push(dj);
    }
    d
}

/// Decrease of the quadratic model along `p`, `-(g^T p + 1/2 ||S V^T p||^2)`,
/// evaluated through the SVD factors; the Gram matrix is never formed.
pub fn quadratic_model_decrease(factors: &SvdFactors, p: &[f64]) -> f64 {
    let t = factors.v().matvec_t(p);
    let mut gp = 0.0;
    let mut quad = 0.0;
    for ((s, c), ti) in factors.sigma().iter().zip(factors.utr()).zip(&t) {
        gp += s * c * ti;
        let st = s * ti;
        quad += st * st;
    }
    -(gp + 0.5 * quad)
}

/// Fits `model` to `data` starting from `x0`.
///
/// Input problems are rejected with an error; numeric breakdown *during* the
/// iteration is not an error but a [`FitStatus::NumericFailure`] result
/// carrying the last good iterate.
pub fn fit<M: Model>(
    model: &M,
    data: &Dataset,
    x0: &[f64],
    options: &FitOptions,
    weights: &WeightSpec,
) -> Result<FitResult> {
    fit_instrumented(model, data, x0, options, weights, &NullClock).map(|(r, _)| r)
}

/// As [`fit`], additionally reporting wall-clock phase timings from `clock`.
pub fn fit_instrumented<M: Model>(
    model: &M,
    data: &Dataset,
    x0: &[f64],
    options: &FitOptions,
    weights: &WeightSpec,
    clock: &dyn Clock,
) -> Result<(FitResult, PhaseTimings)> {
    match options.fixed_size {
        Some(size) => {
            let padded = pad_and_mask(data, size)?;
            run_fit(model, &padded, x0, options, weights, clock)
        }
        None => run_fit(model, data, x0, options, weights, clock),
    }
}

/// Fits over an already padded dataset; `options.fixed_size` is ignored.
pub fn fit_masked<M: Model>(
    model: &M,
    data: &crate::padding::MaskedDataset,
    x0: &[f64],
    options: &FitOptions,
    weights: &WeightSpec,
) -> Result<FitResult> {
    run_fit(model, data, x0, options, weights, &NullClock).map(|(r, _)| r)
}

fn is_runtime_numeric(e: &Error) -> bool {
    matches!(
        e,
        Error::EvaluationFailure { .. }
            | Error::DerivativeFailure { .. }
            | Error::SvdNonConvergence { .. }
    )
}

struct Engine<'a, M: Model, D: FitData + ?Sized> {
    model: &'a M,
    data: &'a D,
    whitener: Whitener,
    clock: &'a dyn Clock,
    timings: PhaseTimings,
    n_model_evals: usize,
    n_jacobian_evals: usize,
}

impl<'a, M: Model, D: FitData + ?Sized> Engine<'a, M, D> {
    fn residuals(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        let t0 = self.clock.now_ns();
        self.n_model_evals += 1;
        let mut r = eval_residuals(self.model, self.data, x)?;
        self.whitener.whiten_residuals(&mut r)?;
        self.timings.residual_ns += self.clock.now_ns().saturating_sub(t0);
        Ok(r)
    }

    fn jacobian(&mut self, x: &[f64]) -> Result<Matrix> {
        let t0 = self.clock.now_ns();
        self.n_jacobian_evals += 1;
        let mut j = eval_jacobian(self.model, self.data, x)?;
        self.whitener.whiten_jacobian(&mut j)?;
        self.timings.jacobian_ns += self.clock.now_ns().saturating_sub(t0);
        Ok(j)
    }

    fn factorize(&mut self, j: &Matrix, r: &[f64]) -> Result<SvdFactors> {
        let t0 = self.clock.now_ns();
        let f = SvdFactors::new(j, r)?;
        self.timings.svd_ns += self.clock.now_ns().saturating_sub(t0);
        Ok(f)
    }
}

fn run_fit<M: Model, D: FitData + ?Sized>(
    model: &M,
    data: &D,
    x0: &[f64],
    options: &FitOptions,
    weights: &WeightSpec,
    clock: &dyn Clock,
) -> Result<(FitResult, PhaseTimings)> {
    options.validate()?;
    let n = model.arity();
    if x0.len() != n {
        return Err(Error::ArityMismatch {
            expected: n,
            actual: x0.len(),
        });
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteData {
            field: "x0",
            index: i,
        });
    }
    if data.point_dim() != model.point_dim() {
        return Err(Error::DimensionMismatch {
            context: "data point dimension does not match the model",
        });
    }
    let v = data.real_points();
    if v < n {
        return Err(Error::Underdetermined {
            points: v,
            parameters: n,
        });
    }
    let whitener = Whitener::prepare(weights, v)?;
    if data.rows() > v && !whitener.row_local() {
        return Err(Error::CovarianceWithPadding);
    }

    let mut eng = Engine {
        model,
        data,
        whitener,
        clock,
        timings: PhaseTimings::default(),
        n_model_evals: 0,
        n_jacobian_evals: 0,
    };
    let t_start = clock.now_ns();

    let mut x = x0.to_vec();
    let max_iter = options.max_iterations.unwrap_or(100 * n);
    let mut alpha_history = Vec::new();
    let mut delta_history = Vec::new();
    let mut cost_history = Vec::new();
    let mut iterations = 0usize;

    // Short-hand for finishing on a runtime numeric failure while keeping
    // whatever iterate is current; `$fail` must diverge.
    macro_rules! numeric_or_bail {
        ($expr:expr, $fail:expr) => {
            match $expr {
                Ok(val) => val,
                Err(e) if is_runtime_numeric(&e) => $fail,
                Err(e) => return Err(e),
            }
        };
    }

    let seed_failure = |mut eng_t: PhaseTimings,
                        evals: (usize, usize)|
     -> Result<(FitResult, PhaseTimings)> {
        eng_t.total_ns = clock.now_ns().saturating_sub(t_start);
        Ok((
            FitResult {
                x_opt: x0.to_vec(),
                cost: f64::NAN,
                residuals: Vec::new(),
                status: FitStatus::NumericFailure,
                iterations: 0,
                n_model_evals: evals.0,
                n_jacobian_evals: evals.1,
                alpha_history: Vec::new(),
                delta_history: Vec::new(),
                cost_history: Vec::new(),
            },
            eng_t,
        ))
    };

    let mut r = numeric_or_bail!(
        eng.residuals(&x),
        return seed_failure(eng.timings, (eng.n_model_evals, eng.n_jacobian_evals))
    );
    let mut f = eval_cost(&r);
    let mut jac = numeric_or_bail!(
        eng.jacobian(&x),
        return seed_failure(eng.timings, (eng.n_model_evals, eng.n_jacobian_evals))
    );
    let mut g = jac.matvec_t(&r);
    let mut d = compute_scaling(&jac, None);
    cost_history.push(f);

    let mut delta = match options.delta0 {
        Delta0::ScaledSeedNorm => {
            let mut acc = 0.0;
            for (dj, xj) in d.iter().zip(&x) {
                let t = dj * xj;
                acc += t * t;
            }
            let nrm = Float::sqrt(acc);
            if nrm > 0.0 {
                nrm
            } else {
                1.0
            }
        }
        Delta0::Fixed(value) => value,
    };

    // Packs up the current iterate; used by every exit path past the seed.
    macro_rules! finish {
        ($status:expr) => {{
            let mut t = eng.timings;
            t.total_ns = clock.now_ns().saturating_sub(t_start);
            return Ok((
                FitResult {
                    x_opt: x,
                    cost: f,
                    residuals: r[..v].to_vec(),
                    status: $status,
                    iterations,
                    n_model_evals: eng.n_model_evals,
                    n_jacobian_evals: eng.n_jacobian_evals,
                    alpha_history,
                    delta_history,
                    cost_history,
                },
                t,
            ));
        }};
    }

    loop {
        if norm_inf(&g) <= options.gtol {
            finish!(FitStatus::ConvergedGtol);
        }
        if iterations >= max_iter {
            finish!(FitStatus::MaxIterations);
        }
        iterations += 1;

        // Scaled Jacobian: columns divided by the equilibration weights.
        let mut jhat = jac.clone();
        for (col, dj) in d.iter().enumerate() {
            jhat.scale_col(col, 1.0 / dj);
        }
        let factors = numeric_or_bail!(eng.factorize(&jhat, &r), {
            finish!(FitStatus::NumericFailure)
        });

        let t_sub = clock.now_ns();
        let trial = solve_shifted(&factors, 0.0);
        let (p, alpha) = if norm2(&trial) <= delta {
            (trial, 0.0)
        } else {
            let sol = solve_lm_parameter(&factors, delta, &options.boundary);
            (sol.p, sol.alpha)
        };
        eng.timings.subproblem_ns += clock.now_ns().saturating_sub(t_sub);

        delta_history.push(delta);
        alpha_history.push(alpha);

        let predicted = quadratic_model_decrease(&factors, &p);

        // Back to natural parameter space.
        let mut w = p.clone();
        for (wi, dj) in w.iter_mut().zip(&d) {
            *wi /= dj;
        }
        let mut x_trial = x.clone();
        for (xt, wi) in x_trial.iter_mut().zip(&w) {
            *xt += wi;
        }

        let r_trial = numeric_or_bail!(eng.residuals(&x_trial), {
            finish!(FitStatus::NumericFailure)
        });
        let f_trial = eval_cost(&r_trial);

        let gamma = gain_ratio(f, f_trial, predicted);
        let decision = apply_update(gamma, norm2(&p), delta);
        let accepted = decision.accept && f_trial < f;
        delta = if accepted {
            decision.new_delta
        } else {
            0.25 * norm2(&p)
        };

        // Convergence tests use the pre-step cost and position.
        let ftol_hit = predicted <= options.ftol * f && (f - f_trial) <= options.ftol * f;
        let xtol_hit = norm2(&w) <= options.xtol * (options.xtol + norm2(&x));

        if accepted {
            x = x_trial;
            r = r_trial;
            f = f_trial;
            cost_history.push(f);
            jac = numeric_or_bail!(eng.jacobian(&x), {
                finish!(FitStatus::NumericFailure)
            });
            g = jac.matvec_t(&r);
            d = compute_scaling(&jac, Some(&d));
        }

        if ftol_hit {
            finish!(FitStatus::ConvergedFtol);
        }
        if xtol_hit {
            finish!(FitStatus::ConvergedXtol);
        }
    }
}
