//! Smoothed L2-Lp sparse regression.
//!
//! `f(x) = |A x - b|^2 / 2 + lambda sum_i s(x_i, eps)^p` where `s` replaces
//! `|t|` by the quadratic cap `t^2 / (2 eps) + eps / 2` on `|t| <= eps`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpParams {
    pub n: usize,
    pub m: usize,
    pub r: f64,
    pub p: f64,
    pub eps: f64,
    pub seed: u64,
}

impl LpParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidInstance("n and m must be positive".into()));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return Err(Error::InvalidInstance(format!("density r must lie in (0, 1], got {}", self.r)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidInstance(format!("p must lie in (0, 1), got {}", self.p)));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInstance(format!("smoothing eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpInstance {
    /// `n x m` design matrix.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub lambda: f64,
    pub p: f64,
    pub eps: f64,
}

impl LpInstance {
    pub fn validate(&self) -> Result<()> {
        if self.a.nrows() != self.b.len() {
            return Err(Error::InvalidInstance("A and b disagree in row count".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidInstance("lambda must be positive".into()));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::InvalidInstance("p must lie in (0, 1)".into()));
        }
        if !(self.eps > 0.0) {
            return Err(Error::InvalidInstance("eps must be positive".into()));
        }
        Ok(())
    }

    pub fn objective(&self) -> LpProblem {
        LpProblem { inst: self.clone(), at: self.a.transpose() }
    }
}

/// Random instance: Gaussian `A` thinned to density `r`, half-sparse
/// ground truth `v` with `N(0, 1/n)` entries, `b = A v + N(0, 1)` noise and
/// `lambda = |A^T b|_inf / 5`.
pub fn lp_generate(params: &LpParams) -> Result<LpInstance> {
    params.validate()?;
    let LpParams { n, m, r, p, eps, seed } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, m);
    for j in 0..m {
        for i in 0..n {
            let keep = rng.random::<f64>() < r;
            let z: f64 = rng.sample(StandardNormal);
            if keep {
                a[(i, j)] = z;
            }
        }
    }
    let small = Normal::new(0.0, (1.0 / n as f64).sqrt()).expect("valid normal");
    let v = DVector::from_fn(m, |_, _| {
        let zero = rng.random::<f64>() < 0.5;
        let z = rng.sample(small);
        if zero {
            0.0
        } else {
            z
        }
    });
    let noise = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let b = &a * v + noise;
    let lambda = (a.transpose() * &b).amax() / 5.0;
    Ok(LpInstance { a, b, lambda, p, eps })
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    inst: LpInstance,
    at: DMatrix<f64>,
}

impl LpProblem {
    pub fn instance(&self) -> &LpInstance {
        &self.inst
    }

    /// Penalty value and its first two derivatives for one coordinate.
    fn penalty(&self, t: f64) -> (f64, f64, f64) {
        let (p, eps) = (self.inst.p, self.inst.eps);
        let (s, ds, dds) = if t.abs() > eps {
            (t.abs(), t.signum(), 0.0)
        } else {
            (t * t / (2.0 * eps) + eps / 2.0, t / eps, 1.0 / eps)
        };
        let sp = s.powf(p);
        let d1 = p * sp / s * ds;
        let d2 = p * (p - 1.0) * sp / (s * s) * ds * ds + p * sp / s * dds;
        (sp, d1, d2)
    }
}

impl Problem for LpProblem {
    fn dim(&self) -> usize {
        self.inst.a.ncols()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let r = &self.inst.a * x - &self.inst.b;
        0.5 * r.norm_squared() + self.inst.lambda * x.iter().map(|&t| self.penalty(t).0).sum::<f64>()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let r = &self.inst.a * x - &self.inst.b;
        let mut g = &self.at * r;
        for (gi, &t) in g.iter_mut().zip(x.iter()) {
            *gi += self.inst.lambda * self.penalty(t).1;
        }
        g
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let mut hv = &self.at * (&self.inst.a * v);
        for i in 0..x.len() {
            hv[i] += self.inst.lambda * self.penalty(x[i]).2 * v[i];
        }
        Some(hv)
    }

    fn has_exact_hvp(&self) -> bool {
        true
    }
}
