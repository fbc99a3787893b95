//! First-order and quasi-Newton reference solvers: gradient descent,
//! Polak-Ribiere+ nonlinear CG and L-BFGS, all driven by a line search.
//!
//! The line search is strong Wolfe (or Armijo backtracking), not
//! Hager-Zhang.

use std::collections::VecDeque;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Objective;
use crate::report::{RunReport, Status, TraceRecord};

pub mod linesearch;

pub use linesearch::{line_search, LineSearchKind, LineSearchSpec};

/// Label attached to benchmark output describing the line search used.
pub const LINE_SEARCH_NOTE: &str = "baselines use a strong-Wolfe line search in place of Hager-Zhang";

/// Minimum relative curvature `s^T y / (|s| |y|)` for an L-BFGS pair.
const PAIR_CURVATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineOptions {
    pub tol_g: f64,
    pub max_iter: usize,
    pub ls: LineSearchSpec,
    pub time_limit: Option<f64>,
}

impl BaselineOptions {
    pub fn new(tol_g: f64, max_iter: usize, ls: LineSearchSpec) -> Self {
        Self { tol_g, max_iter, ls, time_limit: None }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol_g > 0.0) {
            return Err(Error::InvalidConfig(format!("tol_g must be positive, got {}", self.tol_g)));
        }
        self.ls.validate()
    }
}

enum Strategy {
    Gd,
    Cg {
        prev_g: Option<DVector<f64>>,
        prev_p: Option<DVector<f64>>,
    },
    Lbfgs {
        memory: usize,
        pairs: VecDeque<(DVector<f64>, DVector<f64>, f64)>,
        /// `s^T y / y^T y` of the newest accepted pair.
        scale: Option<f64>,
    },
}

impl Strategy {
    fn direction(&mut self, g: &DVector<f64>) -> DVector<f64> {
        match self {
            Strategy::Gd => -g,
            Strategy::Cg { prev_g, prev_p } => match (prev_g.as_ref(), prev_p.as_ref()) {
                (Some(gp), Some(pp)) => {
                    let beta = (g.dot(&(g - gp)) / gp.norm_squared()).max(0.0);
                    let p = -g + pp * beta;
                    if p.dot(g) < 0.0 && beta.is_finite() {
                        p
                    } else {
                        -g
                    }
                }
                _ => -g,
            },
            Strategy::Lbfgs { pairs, scale, .. } => {
                let mut q = g.clone();
                let mut alphas = Vec::with_capacity(pairs.len());
                for (s, y, rho) in pairs.iter().rev() {
                    let a = rho * s.dot(&q);
                    q.axpy(-a, y, 1.0);
                    alphas.push(a);
                }
                q *= scale.unwrap_or(1.0);
                for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
                    let b = rho * y.dot(&q);
                    q.axpy(a - b, s, 1.0);
                }
                -q
            }
        }
    }

    fn reset(&mut self) {
        match self {
            Strategy::Gd => {}
            Strategy::Cg { prev_g, prev_p } => {
                *prev_g = None;
                *prev_p = None;
            }
            Strategy::Lbfgs { pairs, scale, .. } => {
                pairs.clear();
                *scale = None;
            }
        }
    }

    fn update(&mut self, g_old: &DVector<f64>, p: &DVector<f64>, s: DVector<f64>, y: DVector<f64>) {
        match self {
            Strategy::Gd => {}
            Strategy::Cg { prev_g, prev_p } => {
                *prev_g = Some(g_old.clone());
                *prev_p = Some(p.clone());
            }
            Strategy::Lbfgs { memory, pairs, scale } => {
                let sy = s.dot(&y);
                if sy > PAIR_CURVATURE_TOL * s.norm() * y.norm() {
                    *scale = Some(sy / y.norm_squared());
                    if *memory > 0 {
                        if pairs.len() == *memory {
                            pairs.pop_front();
                        }
                        pairs.push_back((s, y, 1.0 / sy));
                    }
                }
            }
        }
    }

    /// Unit steps are natural for quasi-Newton directions once a curvature
    /// scale is known.
    fn prefers_unit_step(&self) -> bool {
        matches!(self, Strategy::Lbfgs { scale: Some(_), .. })
    }
}

fn run(obj: &Objective, x0: &DVector<f64>, opts: &BaselineOptions, mut strategy: Strategy) -> Result<RunReport> {
    opts.validate()?;
    if x0.len() != obj.dim() {
        return Err(Error::DimensionMismatch { expected: obj.dim(), got: x0.len() });
    }
    let clock = Instant::now();
    let mut x = x0.clone();
    let mut f = obj.value(&x);
    if !f.is_finite() || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteStart);
    }
    let mut g = obj.gradient(&x);
    let gnorm_initial = g.norm();
    let mut trace = Vec::new();
    // (alpha, phi'(0)) of the previous search, for the initial-step guess.
    let mut prev: Option<(f64, f64)> = None;
    let mut message = None;
    let status = loop {
        let gnorm = g.norm();
        if gnorm <= opts.tol_g {
            break Status::Converged;
        }
        if trace.len() >= opts.max_iter {
            break Status::MaxIter;
        }
        if opts.time_limit.is_some_and(|t| clock.elapsed().as_secs_f64() > t) {
            break Status::TimeLimit;
        }
        let mut p = strategy.direction(&g);
        let mut dphi0 = g.dot(&p);
        if !(dphi0 < 0.0) {
            strategy.reset();
            p = -&g;
            dphi0 = -gnorm * gnorm;
        }
        let alpha0 = if strategy.prefers_unit_step() {
            1.0
        } else {
            match prev {
                Some((a, d)) => (a * d / dphi0).min(1e10),
                None => (1.0 / gnorm).min(1.0),
            }
        };
        let res = match line_search(obj, &x, f, &g, &p, alpha0, &opts.ls) {
            Ok(r) => r,
            Err(fail) => {
                message = Some(format!("line search failed after {} evaluations", fail.evals));
                break Status::Stalled;
            }
        };
        let s = &res.x - &x;
        let y = &res.g - &g;
        let step_norm = s.norm();
        strategy.update(&g, &p, s, y);
        prev = Some((res.alpha, dphi0));
        x = res.x;
        f = res.f;
        g = res.g;
        trace.push(TraceRecord::plain(trace.len() + 1, f, g.norm(), res.alpha, step_norm));
    };
    Ok(RunReport {
        status,
        f_final: f,
        gnorm_final: g.norm(),
        gnorm_initial,
        iterations: trace.len(),
        counts: obj.counts(),
        trace,
        wall_seconds: clock.elapsed().as_secs_f64(),
        message,
        x_final: x,
    })
}

/// Steepest descent.
pub fn gd_minimize(obj: &Objective, x0: &DVector<f64>, opts: &BaselineOptions) -> Result<RunReport> {
    run(obj, x0, opts, Strategy::Gd)
}

/// Polak-Ribiere+ nonlinear conjugate gradient with restarts whenever the
/// direction stops being a descent direction.
pub fn cg_minimize(obj: &Objective, x0: &DVector<f64>, opts: &BaselineOptions) -> Result<RunReport> {
    run(obj, x0, opts, Strategy::Cg { prev_g: None, prev_p: None })
}

/// Limited-memory BFGS via the two-loop recursion.
pub fn lbfgs_minimize(
    obj: &Objective,
    x0: &DVector<f64>,
    memory: usize,
    opts: &BaselineOptions,
) -> Result<RunReport> {
    run(obj, x0, opts, Strategy::Lbfgs { memory, pairs: VecDeque::new(), scale: None })
}
