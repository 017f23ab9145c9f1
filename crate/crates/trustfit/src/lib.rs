//! Trust region nonlinear least-squares fitting.
//!
//! `trustfit` fits parametric models to data by minimizing half the sum of
//! squared residuals with a trust region variant of Levenberg-Marquardt. The
//! design goal is exact reproducibility: a fit is a deterministic function of
//! its inputs, bit for bit, across runs and across dataset padding.
//!
//! # Features
//!
//! - **Models as plain types.** Implement [`Model`] once with a generic
//!   scalar; the crate evaluates it with `f64` for residuals and with dual
//!   numbers for machine-precision Jacobians. No hand-written derivatives,
//!   no finite-difference tuning.
//! - **SVD-based trust region steps.** Each iteration factorizes the scaled
//!   Jacobian and solves the constrained subproblem in the singular basis,
//!   which stays well behaved on rank-deficient and ill-conditioned problems
//!   where normal equations break down.
//! - **Statistical weighting.** Per-point standard deviations or a full
//!   covariance matrix whiten the residuals so the minimized quantity is the
//!   proper chi-square ([`WeightSpec`]).
//! - **Fixed-size padding.** Datasets of varying length can be padded to a
//!   common size with masked dummy rows without changing the fit result at
//!   all ([`padding`]), which keeps downstream batching simple.
//! - **Reproducible benchmark data.** A counter-based generator produces
//!   noisy 2-d Gaussian images for scaling studies; any image can be
//!   regenerated from its seed and index alone ([`datagen`]).
//! - **`no_std` core.** The crate only needs `alloc`; hosts provide a
//!   [`Clock`](solver::Clock) if they want phase timings.
//!
//! # Usage
//!
//! ```
//! use trustfit::{fit, Dataset, FitOptions, Model, Scalar, WeightSpec};
//!
//! /// Exponential decay with a floor: x0 * exp(x1 * t) + x2.
//! struct Decay;
//!
//! impl Model for Decay {
//!     fn arity(&self) -> usize {
//!         3
//!     }
//!     fn point_dim(&self) -> usize {
//!         1
//!     }
//!     fn eval<S: Scalar>(&self, point: &[f64], params: &[S]) -> S {
//!         (params[1].clone() * point[0]).exp() * params[0].clone() + params[2].clone()
//!     }
//! }
//!
//! let t: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
//! let z: Vec<f64> = t.iter().map(|t| 2.0 * (-0.7 * t).exp() + 0.25).collect();
//! let data = Dataset::new(t, z)?;
//!
//! let result = fit(
//!     &Decay,
//!     &data,
//!     &[1.0, -0.3, 0.0],
//!     &FitOptions::default(),
//!     &WeightSpec::Unweighted,
//! )?;
//!
//! assert!(result.status.converged());
//! assert!((result.x_opt[0] - 2.0).abs() < 1e-6);
//! assert!((result.x_opt[1] + 0.7).abs() < 1e-6);
//! assert!((result.x_opt[2] - 0.25).abs() < 1e-6);
//! # Ok::<(), trustfit::Error>(())
//! ```
//!
//! # How a fit proceeds
//!
//! Each iteration scales the Jacobian by running-maximum column norms, takes
//! the Gauss-Newton step if it fits inside the trust radius, and otherwise
//! solves for the shift parameter that puts the step on the boundary. The
//! radius then adapts to how well the quadratic model predicted the actual
//! cost change. Steps are only ever accepted when the cost strictly
//! decreases, so the reported cost trace is non-increasing. Three standard
//! tolerances (`ftol`, `xtol`, `gtol`) decide convergence; see [`FitOptions`]
//! and [`FitStatus`].

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod builtin;
pub mod datagen;
pub mod dual;
mod error;
pub mod linalg;
pub mod model;
pub mod padding;
pub mod solver;
pub mod subproblem;
pub mod weights;

pub use crate::dual::{DualScalar, Scalar};
pub use crate::error::{Error, Result};
pub use crate::model::{Dataset, FitData, Model};
pub use crate::solver::{
    fit, fit_instrumented, fit_masked, Delta0, FitOptions, FitResult, FitStatus,
};
pub use crate::weights::WeightSpec;
