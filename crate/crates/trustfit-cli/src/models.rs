//! Built-in model selection by name.

use anyhow::{bail, Result};
use trustfit::builtin::{Exponential, Gaussian2d, Linear, Polynomial};
use trustfit::{Model, Scalar};

/// The models the CLI can fit. User-defined models are a library feature;
/// keeping the CLI's set closed keeps its derivative path fully tested.
pub enum AnyModel {
    Linear(Linear),
    Exponential(Exponential),
    Polynomial(Polynomial),
    Gaussian2d(Gaussian2d),
}

impl AnyModel {
    /// Parses `linear`, `exponential`, `polynomial:<degree>`, `gaussian2d`.
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "linear" => Ok(AnyModel::Linear(Linear)),
            "exponential" => Ok(AnyModel::Exponential(Exponential)),
            "gaussian2d" => Ok(AnyModel::Gaussian2d(Gaussian2d)),
            other => {
                if let Some(deg) = other.strip_prefix("polynomial:") {
                    let degree: usize = deg
                        .parse()
                        .map_err(|_| anyhow::anyhow!("invalid polynomial degree `{deg}`"))?;
                    return Ok(AnyModel::Polynomial(Polynomial { degree }));
                }
                bail!(
                    "unknown model `{other}` (expected linear, exponential, \
                     polynomial:<degree>, or gaussian2d)"
                );
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            AnyModel::Linear(_) => "linear".into(),
            AnyModel::Exponential(_) => "exponential".into(),
            AnyModel::Polynomial(p) => format!("polynomial:{}", p.degree),
            AnyModel::Gaussian2d(_) => "gaussian2d".into(),
        }
    }
}

impl Model for AnyModel {
    fn arity(&self) -> usize {
        match self {
            AnyModel::Linear(m) => m.arity(),
            AnyModel::Exponential(m) => m.arity(),
            AnyModel::Polynomial(m) => m.arity(),
            AnyModel::Gaussian2d(m) => m.arity(),
        }
    }

    fn point_dim(&self) -> usize {
        match self {
            AnyModel::Linear(m) => m.point_dim(),
            AnyModel::Exponential(m) => m.point_dim(),
            AnyModel::Polynomial(m) => m.point_dim(),
            AnyModel::Gaussian2d(m) => m.point_dim(),
        }
    }

    fn eval<S: Scalar>(&self, point: &[f64], params: &[S]) -> S {
        match self {
            AnyModel::Linear(m) => m.eval(point, params),
            AnyModel::Exponential(m) => m.eval(point, params),
            AnyModel::Polynomial(m) => m.eval(point, params),
            AnyModel::Gaussian2d(m) => m.eval(point, params),
        }
    }
}
