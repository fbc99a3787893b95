//! Subspace expansion by Hessian-times-step directions.
//!
//! Starting from `span{g, d}`, the corrector repeatedly appends `H d^j`
//! (orthonormalized) and re-solves the trust-region model on the enlarged
//! subspace, until either the multiplier exceeds `sqrt(eps)` or the
//! projected residual `|(I - V V^T) H d|` drops below `C |d|^2`.
//!
//! `H v_i` is cached for every basis vector, so `H d` for any `d` in the
//! subspace is a linear combination of cached columns and each expansion
//! costs exactly one HVP.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::problem::Objective;
use crate::trs;

/// Relative threshold below which an appended direction counts as
/// dependent.
pub const DROP_TOL: f64 = 1e-10;

/// Orthonormal basis with optional cached Hessian products.
#[derive(Debug, Clone, Default)]
pub struct Subspace {
    pub vectors: Vec<DVector<f64>>,
}

impl Subspace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Modified Gram-Schmidt append with one reorthogonalization pass.
    /// Returns `false` (and leaves the basis unchanged) when `w` is
    /// numerically dependent on the current vectors.
    pub fn expand(&mut self, w: &DVector<f64>) -> bool {
        let wnorm = w.norm();
        if !(wnorm > 0.0) || !wnorm.is_finite() {
            return false;
        }
        let mut r = w.clone();
        for _ in 0..2 {
            for v in &self.vectors {
                let p = v.dot(&r);
                r.axpy(-p, v, 1.0);
            }
        }
        let rnorm = r.norm();
        if rnorm <= DROP_TOL * wnorm {
            return false;
        }
        self.vectors.push(r / rnorm);
        true
    }

    /// `V^T w`
    pub fn coords(&self, w: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.vectors.iter().map(|v| v.dot(w)))
    }

    /// `V a`
    pub fn combine(&self, a: &DVector<f64>) -> DVector<f64> {
        let n = self.vectors.first().map_or(0, |v| v.len());
        let mut out = DVector::zeros(n);
        for (ai, v) in a.iter().zip(&self.vectors) {
            out.axpy(*ai, v, 1.0);
        }
        out
    }

    /// `(I - V V^T) w`
    pub fn project_out(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut r = w.clone();
        for v in &self.vectors {
            let p = v.dot(w);
            r.axpy(-p, v, 1.0);
        }
        r
    }
}

/// `|(I - V V^T) H d|` for a step `d` in `span(V)`.
pub fn residual(
    obj: &Objective,
    x: &DVector<f64>,
    g_x: &DVector<f64>,
    v: &Subspace,
    d: &DVector<f64>,
) -> Result<f64> {
    let hd = obj.hvp(x, d, g_x)?;
    Ok(v.project_out(&hd).norm())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorParams {
    /// Radius of the enlarged trust-region problems.
    pub radius: f64,
    /// Target gradient tolerance; the multiplier threshold is `sqrt(eps)`.
    pub eps: f64,
    /// Constant of the approximate-Hessian condition.
    pub c: f64,
    pub max_dim: usize,
}

#[derive(Debug, Clone)]
pub struct CorrectorOutcome {
    pub step: DVector<f64>,
    pub lambda: f64,
    pub satisfied: bool,
    pub model_decrease: f64,
    pub residual: f64,
    pub subspace_dim: usize,
    pub expansions: usize,
    /// Residual after each model solve, starting with the incumbent step.
    pub residual_history: Vec<f64>,
    pub on_boundary: bool,
}

/// Run the corrector from the incumbent step `d_init` (with multiplier
/// `lambda_init`) computed over `span{g_x, momentum}`.
pub fn corrector_step(
    obj: &Objective,
    x: &DVector<f64>,
    g_x: &DVector<f64>,
    momentum: &DVector<f64>,
    d_init: &DVector<f64>,
    lambda_init: f64,
    params: &CorrectorParams,
) -> Result<CorrectorOutcome> {
    let n = x.len();
    let mut space = Subspace::new();
    space.expand(g_x);
    space.expand(momentum);
    let mut hv: Vec<DVector<f64>> = Vec::with_capacity(space.dim());
    for v in &space.vectors {
        hv.push(obj.hvp(x, v, g_x)?);
    }
    let hd_of = |hv: &[DVector<f64>], a: &DVector<f64>| {
        let mut out = DVector::zeros(n);
        for (ai, h) in a.iter().zip(hv) {
            out.axpy(*ai, h, 1.0);
        }
        out
    };
    let threshold = params.eps.sqrt();
    let cap = params.max_dim.min(n);

    let mut a = space.coords(d_init);
    let mut step = d_init.clone();
    let mut lambda = lambda_init;
    let mut hd = hd_of(&hv, &a);
    let mut res = space.project_out(&hd).norm();
    let mut decrease = -(g_x.dot(&step) + 0.5 * step.dot(&hd));
    let mut on_boundary = lambda > 0.0;
    let mut history = vec![res];
    let mut expansions = 0;

    let done = |lambda: f64, res: f64, step: &DVector<f64>| {
        lambda > threshold || res <= params.c * step.norm_squared()
    };

    loop {
        if done(lambda, res, &step) {
            break;
        }
        if space.dim() >= cap || !space.expand(&hd) {
            return Ok(CorrectorOutcome {
                step,
                lambda,
                satisfied: false,
                model_decrease: decrease,
                residual: res,
                subspace_dim: space.dim(),
                expansions,
                residual_history: history,
                on_boundary,
            });
        }
        expansions += 1;
        let newest = space.vectors.last().expect("just expanded");
        hv.push(obj.hvp(x, newest, g_x)?);
        let j = space.dim();
        let q = DMatrix::from_fn(j, j, |r, c| space.vectors[r].dot(&hv[c]));
        let c = space.coords(g_x);
        let sol = trs::solve_trs_with_limit(&q, &c, &DMatrix::identity(j, j), params.radius, params.max_dim.max(j))?;
        a = sol.alpha;
        step = space.combine(&a);
        lambda = sol.lambda;
        on_boundary = sol.on_boundary;
        decrease = sol.model_decrease;
        hd = hd_of(&hv, &a);
        res = space.project_out(&hd).norm();
        history.push(res);
    }
    Ok(CorrectorOutcome {
        step,
        lambda,
        satisfied: true,
        model_decrease: decrease,
        residual: res,
        subspace_dim: space.dim(),
        expansions,
        residual_history: history,
        on_boundary,
    })
}
