//! Objective interface shared by every solver in the crate.
//!
//! A [`Problem`] supplies values, gradients and (optionally) exact
//! Hessian-vector products. [`Objective`] wraps a problem together with the
//! evaluation counters, so that DRSOM and the baselines report comparable
//! costs.

use std::cell::Cell;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A smooth function `f: R^n -> R`.
pub trait Problem {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// Exact Hessian-vector product `H(x) v`, if the problem provides one.
    fn hessian_vector(&self, _x: &DVector<f64>, _v: &DVector<f64>) -> Option<DVector<f64>> {
        None
    }

    fn has_exact_hvp(&self) -> bool {
        false
    }
}

/// Function, gradient and HVP evaluation counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct EvalCounts {
    pub n_f: u64,
    pub n_g: u64,
    pub n_hvp: u64,
}

/// A [`Problem`] plus evaluation accounting.
///
/// Counters use interior mutability, so an `Objective` is confined to one
/// thread. Concurrent runs should each build their own instance.
pub struct Objective {
    problem: Box<dyn Problem>,
    use_exact_hvp: bool,
    n_f: Cell<u64>,
    n_g: Cell<u64>,
    n_hvp: Cell<u64>,
}

impl Objective {
    pub fn new<P: Problem + 'static>(problem: P) -> Self {
        Self::from_boxed(Box::new(problem))
    }

    pub fn from_boxed(problem: Box<dyn Problem>) -> Self {
        let use_exact_hvp = problem.has_exact_hvp();
        Self {
            problem,
            use_exact_hvp,
            n_f: Cell::new(0),
            n_g: Cell::new(0),
            n_hvp: Cell::new(0),
        }
    }

    /// Ignore the problem's exact HVP and always use finite differences.
    pub fn without_exact_hvp(mut self) -> Self {
        self.use_exact_hvp = false;
        self
    }

    pub fn dim(&self) -> usize {
        self.problem.dim()
    }

    pub fn has_exact_hvp(&self) -> bool {
        self.use_exact_hvp
    }

    pub fn problem(&self) -> &dyn Problem {
        self.problem.as_ref()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.n_f.set(self.n_f.get() + 1);
        self.problem.value(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        self.n_g.set(self.n_g.get() + 1);
        let g = self.problem.gradient(x);
        debug_assert_eq!(g.len(), self.dim());
        g
    }

    /// Forward-difference HVP: `(grad(x + h v) - g_x) / h` with
    /// `h = 2 sqrt(u) (1 + |x|) / |v|`. Costs one gradient evaluation.
    pub fn hvp_fd(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        g_x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        let vnorm = v.norm();
        if vnorm == 0.0 || !vnorm.is_finite() {
            return Err(Error::DegenerateDirection);
        }
        let h = fd_displacement(x, vnorm);
        let shifted = x + v * h;
        let g_shift = self.gradient(&shifted);
        Ok((g_shift - g_x) / h)
    }

    /// HVP dispatch: exact when available and enabled, forward difference
    /// otherwise.
    pub fn hvp(
        &self,
        x: &DVector<f64>,
        v: &DVector<f64>,
        g_x: &DVector<f64>,
    ) -> Result<DVector<f64>> {
        if self.use_exact_hvp {
            if let Some(hv) = self.problem.hessian_vector(x, v) {
                self.n_hvp.set(self.n_hvp.get() + 1);
                return Ok(hv);
            }
        }
        self.hvp_fd(x, v, g_x)
    }

    pub fn counts(&self) -> EvalCounts {
        EvalCounts {
            n_f: self.n_f.get(),
            n_g: self.n_g.get(),
            n_hvp: self.n_hvp.get(),
        }
    }

    pub fn reset_counts(&self) {
        self.n_f.set(0);
        self.n_g.set(0);
        self.n_hvp.set(0);
    }
}

impl std::fmt::Debug for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.dim())
            .field("use_exact_hvp", &self.use_exact_hvp)
            .field("counts", &self.counts())
            .finish()
    }
}

pub(crate) fn fd_displacement(x: &DVector<f64>, vnorm: f64) -> f64 {
    2.0 * f64::EPSILON.sqrt() * (1.0 + x.norm()) / vnorm
}

type HvpFn = Box<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>>;

/// A problem assembled from closures. Handy for tests and bindings.
pub struct FnProblem<F, G> {
    dim: usize,
    f: F,
    g: G,
    hvp: Option<HvpFn>,
}

impl<F, G> FnProblem<F, G>
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    pub fn new(dim: usize, f: F, g: G) -> Self {
        Self { dim, f, g, hvp: None }
    }

    pub fn with_hvp<H>(mut self, hvp: H) -> Self
    where
        H: Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + 'static,
    {
        self.hvp = Some(Box::new(hvp));
        self
    }
}

impl<F, G> Problem for FnProblem<F, G>
where
    F: Fn(&DVector<f64>) -> f64,
    G: Fn(&DVector<f64>) -> DVector<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (self.f)(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.g)(x)
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        self.hvp.as_ref().map(|h| h(x, v))
    }

    fn has_exact_hvp(&self) -> bool {
        self.hvp.is_some()
    }
}
