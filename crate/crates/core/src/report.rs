use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::problem::EvalCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Stalled,
    TimeLimit,
    Error,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIter => "max_iter",
            Status::Stalled => "stalled",
            Status::TimeLimit => "time_limit",
            Status::Error => "error",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One iteration. `f` and `gnorm` describe the iterate after the step
/// (unchanged on rejection). Fields without meaning for a solver are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    pub f: f64,
    pub gnorm: f64,
    pub lambda_or_mu: f64,
    pub delta: f64,
    pub rho: f64,
    pub step_norm: f64,
    pub accepted: bool,
    /// `m(0) - m(alpha)` of the trial step (DRSOM only).
    #[serde(skip)]
    pub model_decrease: f64,
    /// Dimension of the model the step came from.
    #[serde(skip)]
    pub subspace_dim: usize,
    #[serde(skip)]
    pub on_boundary: bool,
}

impl TraceRecord {
    pub(crate) fn plain(k: usize, f: f64, gnorm: f64, step_len: f64, step_norm: f64) -> Self {
        Self {
            k,
            f,
            gnorm,
            lambda_or_mu: f64::NAN,
            delta: step_len,
            rho: f64::NAN,
            step_norm,
            accepted: true,
            model_decrease: f64::NAN,
            subspace_dim: 1,
            on_boundary: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub status: Status,
    pub x_final: DVector<f64>,
    pub f_final: f64,
    pub gnorm_final: f64,
    pub gnorm_initial: f64,
    pub iterations: usize,
    pub counts: EvalCounts,
    pub trace: Vec<TraceRecord>,
    pub wall_seconds: f64,
    pub message: Option<String>,
}

impl RunReport {
    pub fn converged(&self) -> bool {
        self.status == Status::Converged
    }
}
