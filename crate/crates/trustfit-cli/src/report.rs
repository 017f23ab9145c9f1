//! JSON fit report (schema `trustfit-report/1`) and the wall-clock source.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use trustfit::solver::{Clock, PhaseTimings};
use trustfit::FitResult;

pub const REPORT_SCHEMA: &str = "trustfit-report/1";

/// Machine-readable result of one `fit` invocation.
///
/// The numeric fields reproduce bitwise across reruns with identical inputs;
/// only `timings_s` is machine- and load-dependent. A fit that failed at the
/// very first evaluation reports `cost: null`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub schema: String,
    pub model: String,
    pub x0: Vec<f64>,
    pub x_opt: Vec<f64>,
    pub cost: f64,
    pub status: String,
    pub iterations: usize,
    pub n_model_evals: usize,
    pub n_jacobian_evals: usize,
    pub timings_s: TimingsSeconds,
    /// Trust radius in effect at each iteration.
    pub delta_trace: Vec<f64>,
    /// Shift parameter chosen at each iteration (0 = interior step).
    pub alpha_trace: Vec<f64>,
    /// Cost at the seed, then after each accepted step.
    pub cost_trace: Vec<f64>,
}

/// Per-phase wall-clock seconds.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TimingsSeconds {
    pub residual: f64,
    pub jacobian: f64,
    pub svd: f64,
    pub subproblem: f64,
    pub total: f64,
}

impl From<PhaseTimings> for TimingsSeconds {
    fn from(t: PhaseTimings) -> Self {
        let s = |ns: u64| ns as f64 * 1e-9;
        TimingsSeconds {
            residual: s(t.residual_ns),
            jacobian: s(t.jacobian_ns),
            svd: s(t.svd_ns),
            subproblem: s(t.subproblem_ns),
            total: s(t.total_ns),
        }
    }
}

impl FitReport {
    pub fn new(model: String, x0: &[f64], result: &FitResult, timings: PhaseTimings) -> Self {
        FitReport {
            schema: REPORT_SCHEMA.to_string(),
            model,
            x0: x0.to_vec(),
            x_opt: result.x_opt.clone(),
            cost: result.cost,
            status: result.status.as_str().to_string(),
            iterations: result.iterations,
            n_model_evals: result.n_model_evals,
            n_jacobian_evals: result.n_jacobian_evals,
            timings_s: timings.into(),
            delta_trace: result.delta_history.clone(),
            alpha_trace: result.alpha_history.clone(),
            cost_trace: result.cost_history.clone(),
        }
    }
}

/// Monotonic nanosecond clock backed by [`Instant`].
pub struct StdClock(Instant);

impl StdClock {
    pub fn new() -> Self {
        StdClock(Instant::now())
    }
}

impl Default for StdClock {
    fn default() -> Self {
        Self::new()
    }
}

impl Clock for StdClock {
    fn now_ns(&self) -> u64 {
        self.0.elapsed().as_nanos() as u64
    }
}
