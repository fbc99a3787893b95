//! Low-dimensional quadratic models over `span{-g, d}`.
//!
//! With `B = [-g, d]` the model of `f(x + B a)` is
//! `f(x) + c^T a + a^T Q a / 2` where `c = B^T g`, `Q = B^T H B` and the
//! step length is measured in the Gram norm `G = B^T B`. `Q` comes either
//! from two Hessian-vector products or from fitting `l >= 3` extra function
//! values.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Objective;
use crate::trs;

/// Condition-number ceiling for the interpolation system.
const INTERP_MAX_COND: f64 = 1e8;
const INTERP_RESAMPLES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadModel {
    pub q: DMatrix<f64>,
    pub c: DVector<f64>,
    pub gram: DMatrix<f64>,
    pub f0: f64,
    /// `basis[0] = -g`, `basis[1] = d` when present.
    pub basis: Vec<DVector<f64>>,
    pub gram_rank: usize,
}

impl QuadModel {
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    /// `m(a) = f0 + c^T a + a^T Q a / 2`
    pub fn value(&self, alpha: &DVector<f64>) -> f64 {
        self.f0 + trs::model_value(&self.q, &self.c, alpha)
    }

    /// `m(0) - m(a)`
    pub fn decrease(&self, alpha: &DVector<f64>) -> f64 {
        -trs::model_value(&self.q, &self.c, alpha)
    }

    /// The full-space step `sum_i a_i basis_i`.
    pub fn lift(&self, alpha: &DVector<f64>) -> DVector<f64> {
        let mut step = DVector::zeros(self.basis[0].len());
        for (a, b) in alpha.iter().zip(&self.basis) {
            step.axpy(*a, b, 1.0);
        }
        step
    }

    fn from_parts(
        q: DMatrix<f64>,
        basis: Vec<DVector<f64>>,
        g: &DVector<f64>,
        f0: f64,
    ) -> Result<Self> {
        let j = basis.len();
        let gram = DMatrix::from_fn(j, j, |r, c| basis[r].dot(&basis[c]));
        let c = DVector::from_fn(j, |r, _| basis[r].dot(g));
        let q = trs::symmetrize(&q);
        if q.iter().chain(c.iter()).chain(gram.iter()).any(|v| !v.is_finite()) || !f0.is_finite() {
            return Err(Error::ModelBuildFailed("non-finite entries"));
        }
        let gram_rank = trs::factor_gram(&gram)?.range.ncols();
        Ok(Self { q, c, gram, f0, basis, gram_rank })
    }
}

/// How `Q` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum ModelMethod {
    /// HVPs, exact when the problem provides them.
    HvpExact,
    /// Forward-difference HVPs.
    HvpFd,
    Interpolation { samples: usize, scale: InterpScale },
}

impl Default for ModelMethod {
    fn default() -> Self {
        ModelMethod::Interpolation {
            samples: 3,
            scale: InterpScale::Fixed(1.0),
        }
    }
}

impl ModelMethod {
    pub fn validate(&self) -> Result<()> {
        if let ModelMethod::Interpolation { samples, scale } = self {
            if *samples < 3 {
                return Err(Error::InvalidConfig(format!(
                    "interpolation needs at least 3 samples, got {samples}"
                )));
            }
            if let InterpScale::Fixed(s) = scale {
                if !(*s > 0.0 && s.is_finite()) {
                    return Err(Error::InvalidConfig(format!("interpolation scale must be positive, got {s}")));
                }
            }
        }
        Ok(())
    }
}

/// Radius of the sample circle for interpolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum InterpScale {
    Fixed(f64),
    /// `min(1, radius)` where the radius is the current trust radius (or
    /// the last step length in radius-free mode).
    TrustRadius,
}

impl InterpScale {
    pub fn resolve(&self, radius_hint: Option<f64>) -> f64 {
        match *self {
            InterpScale::Fixed(s) => s,
            InterpScale::TrustRadius => radius_hint.map_or(1.0, |r| r.min(1.0)).max(1e-8),
        }
    }
}

fn subspace_basis(g: &DVector<f64>, d: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
    if g.len() != d.len() {
        return Err(Error::DimensionMismatch { expected: g.len(), got: d.len() });
    }
    if !(g.norm() > 0.0) {
        return Err(Error::ModelBuildFailed("zero gradient"));
    }
    let mut basis = vec![-g];
    if d.norm() > 0.0 {
        basis.push(d.clone());
    }
    Ok(basis)
}

/// Model from HVPs. `exact` selects dispatching HVPs (exact when
/// available); otherwise forward differences are forced.
pub fn build_hvp(
    obj: &Objective,
    x: &DVector<f64>,
    g: &DVector<f64>,
    d: &DVector<f64>,
    f_x: f64,
    exact: bool,
) -> Result<QuadModel> {
    let basis = subspace_basis(g, d)?;
    let mut hb = Vec::with_capacity(basis.len());
    for b in &basis {
        let hv = if exact { obj.hvp(x, b, g)? } else { obj.hvp_fd(x, b, g)? };
        hb.push(hv);
    }
    let j = basis.len();
    let q = DMatrix::from_fn(j, j, |r, c| basis[r].dot(&hb[c]));
    QuadModel::from_parts(q, basis, g, f_x)
}

/// Model from interpolation. Random samples move each basis direction by
/// at most `scale` in x-space, i.e. `beta = scale (cos t / |g|, sin t / |d|)`.
/// `fixed` overrides the random set with raw coefficients.
#[allow(clippy::too_many_arguments)]
pub fn build_interp<R: Rng + ?Sized>(
    obj: &Objective,
    x: &DVector<f64>,
    g: &DVector<f64>,
    d: &DVector<f64>,
    f_x: f64,
    samples: usize,
    scale: f64,
    rng: &mut R,
    fixed: Option<&[[f64; 2]]>,
) -> Result<QuadModel> {
    if samples < 3 {
        return Err(Error::InvalidConfig(format!("interpolation needs at least 3 samples, got {samples}")));
    }
    let basis = subspace_basis(g, d)?;
    let j = basis.len();
    let c = DVector::from_fn(j, |r, _| basis[r].dot(g));
    let lengths = [basis[0].norm(), basis.get(1).map_or(1.0, |b| b.norm())];
    let attempts = if fixed.is_some() { 1 } else { 1 + INTERP_RESAMPLES };
    for _ in 0..attempts {
        // Samples in length-normalized coordinates `u_i = beta_i |b_i|`; the
        // fit is done there and mapped back, which keeps the monomial system
        // well conditioned when |g| and |d| differ by orders of magnitude.
        let us: Vec<[f64; 2]> = match fixed {
            Some(b) => b.iter().map(|b| [b[0] * lengths[0], b[1] * lengths[1]]).collect(),
            None => (0..samples)
                .map(|_| {
                    let t = rng.random::<f64>() * std::f64::consts::TAU;
                    [scale * t.cos(), scale * t.sin()]
                })
                .collect(),
        };
        let rows: Vec<Vec<f64>> = us
            .iter()
            .map(|u| {
                if j == 1 {
                    // One-dimensional model: only the first coordinate moves.
                    vec![0.5 * u[0] * u[0]]
                } else {
                    vec![0.5 * u[0] * u[0], u[0] * u[1], 0.5 * u[1] * u[1]]
                }
            })
            .collect();
        let ncol = rows[0].len();
        let m = DMatrix::from_fn(rows.len(), ncol, |r, k| rows[r][k]);
        let svd = m.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 0.0) || smax / smin > INTERP_MAX_COND {
            continue;
        }
        let mut rhs = DVector::zeros(rows.len());
        for (i, u) in us.iter().enumerate() {
            let alpha = DVector::from_fn(j, |r, _| u[r] / lengths[r]);
            let mut xt = x.clone();
            for (a, v) in alpha.iter().zip(&basis) {
                xt.axpy(*a, v, 1.0);
            }
            let ft = obj.value(&xt);
            if !ft.is_finite() {
                return Err(Error::ModelBuildFailed("non-finite function value at a sample"));
            }
            rhs[i] = ft - f_x - c.dot(&alpha);
        }
        let coef = svd
            .solve(&rhs, 0.0)
            .map_err(|_| Error::InterpolationDegenerate)?;
        let q_hat = if j == 1 {
            DMatrix::from_element(1, 1, coef[0])
        } else {
            DMatrix::from_row_slice(2, 2, &[coef[0], coef[1], coef[1], coef[2]])
        };
        let q = DMatrix::from_fn(j, j, |r, k| q_hat[(r, k)] * lengths[r] * lengths[k]);
        return QuadModel::from_parts(q, basis, g, f_x);
    }
    Err(Error::InterpolationDegenerate)
}
