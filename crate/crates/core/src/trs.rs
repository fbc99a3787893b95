//! Dense small-dimensional trust-region subproblems in a Gram norm.
//!
//! Every routine here works on the triple `(Q, c, G)` of a quadratic model
//! `c^T a + a^T Q a / 2` whose step norm is `|a|_G = sqrt(a^T G a)`. `G` is
//! the Gram matrix of the subspace basis and may be singular when the basis
//! vectors are linearly dependent.
//!
//! The problem is first mapped to Euclidean coordinates through a
//! diagonally scaled eigendecomposition of `G`; the Euclidean ball problem
//! is then solved exactly from the eigendecomposition of the transformed
//! curvature, with the multiplier obtained from the secular equation.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Default cap on the subspace dimension.
pub const DEFAULT_MAX_DIM: usize = 50;

/// Relative eigenvalue floor (on the unit-diagonal scaled Gram matrix) below
/// which a direction is treated as lying in the null space of `G`.
const GRAM_RANK_TOL: f64 = 1e-10;
/// Scaled Gram eigenvalues below `-GRAM_NEG_TOL` make `G` invalid.
const GRAM_NEG_TOL: f64 = 1e-10;
/// Relative tolerance for treating null-space couplings as zero.
const NULL_COUPLING_TOL: f64 = 1e-10;
/// A gradient component this small (relative) along the leftmost
/// eigenvector triggers the hard-case construction.
const HARD_CASE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrsSolution {
    pub alpha: DVector<f64>,
    pub lambda: f64,
    /// `m(0) - m(alpha)`, never negative up to rounding.
    pub model_decrease: f64,
    pub on_boundary: bool,
    pub hard_case: bool,
    /// Set when `G` was singular and the null-space directions had to be
    /// dropped because the model was unbounded along them.
    pub reduced: bool,
}

/// Optimality certificate of a TRS solution.
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// `|(Q + lambda G) alpha + c|`
    pub stationarity: f64,
    /// Smallest eigenvalue of `Q + lambda G`.
    pub min_eig: f64,
    /// Spectral norm of `Q + lambda G`.
    pub matrix_norm: f64,
    /// `lambda * (delta - |alpha|_G)`
    pub complementarity: f64,
    /// `|alpha|_G`
    pub g_norm: f64,
}

impl KktReport {
    /// The three optimality conditions at the standard tolerances.
    pub fn holds(&self, c_norm: f64, delta: f64) -> bool {
        self.stationarity <= 1e-8 * (1.0 + c_norm)
            && self.min_eig >= -1e-8 * self.matrix_norm.max(1e-300)
            && self.complementarity.abs() <= 1e-8 * (1.0 + delta)
            && self.g_norm <= delta * (1.0 + 1e-8)
    }
}

pub fn kkt_report(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    delta: f64,
    sol: &TrsSolution,
) -> KktReport {
    let m = q + g * sol.lambda;
    let stationarity = (&m * &sol.alpha + c).norm();
    let eig = SymmetricEigen::new(symmetrize(&m)).eigenvalues;
    let min_eig = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let matrix_norm = eig.iter().fold(0.0f64, |a, e| a.max(e.abs()));
    let g_norm = gram_norm(g, &sol.alpha);
    KktReport {
        stationarity,
        min_eig,
        matrix_norm,
        complementarity: sol.lambda * (delta - g_norm),
        g_norm,
    }
}

/// `sqrt(a^T G a)`, clamped at zero.
pub fn gram_norm(g: &DMatrix<f64>, a: &DVector<f64>) -> f64 {
    a.dot(&(g * a)).max(0.0).sqrt()
}

/// `c^T a + a^T Q a / 2`
pub fn model_value(q: &DMatrix<f64>, c: &DVector<f64>, a: &DVector<f64>) -> f64 {
    c.dot(a) + 0.5 * a.dot(&(q * a))
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Range/null split of a PSD Gram matrix: `range^T G range = I` and
/// `G null = 0`.
#[derive(Debug, Clone)]
pub(crate) struct GramFactor {
    pub range: DMatrix<f64>,
    pub null: DMatrix<f64>,
}

pub(crate) fn factor_gram(g: &DMatrix<f64>) -> Result<GramFactor> {
    let j = g.nrows();
    let g = symmetrize(g);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidGram { min_eig: f64::NAN });
    }
    let max_diag = g.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut active = Vec::new();
    let mut inactive = Vec::new();
    for i in 0..j {
        let gi = g[(i, i)];
        if gi < -GRAM_NEG_TOL * max_diag {
            return Err(Error::InvalidGram { min_eig: gi });
        }
        if gi > 0.0 {
            active.push(i);
        } else {
            inactive.push(i);
        }
    }
    // A zero diagonal entry forces a zero row in a PSD matrix.
    for &i in &inactive {
        for k in 0..j {
            if g[(i, k)].abs() > GRAM_NEG_TOL * max_diag {
                return Err(Error::InvalidGram { min_eig: -g[(i, k)].abs() });
            }
        }
    }
    let a = active.len();
    let scale: Vec<f64> = active.iter().map(|&i| 1.0 / g[(i, i)].sqrt()).collect();
    let scaled = DMatrix::from_fn(a, a, |r, c| {
        g[(active[r], active[c])] * scale[r] * scale[c]
    });
    let eig = SymmetricEigen::new(scaled);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if a > 0 && min_eig < -GRAM_NEG_TOL {
        return Err(Error::InvalidGram { min_eig });
    }
    let mut range_cols = Vec::new();
    let mut null_cols = Vec::new();
    let mut order: Vec<usize> = (0..a).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[y].total_cmp(&eig.eigenvalues[x]));
    for k in order {
        let sigma = eig.eigenvalues[k];
        let u = eig.eigenvectors.column(k);
        let mut col = DVector::zeros(j);
        for (r, &i) in active.iter().enumerate() {
            col[i] = scale[r] * u[r];
        }
        if sigma > GRAM_RANK_TOL {
            range_cols.push(col / sigma.sqrt());
        } else {
            let n = col.norm();
            null_cols.push(col / n);
        }
    }
    for &i in &inactive {
        let mut e = DVector::zeros(j);
        e[i] = 1.0;
        null_cols.push(e);
    }
    let null = orthonormal_columns(j, &null_cols);
    Ok(GramFactor {
        range: columns(j, &range_cols),
        null,
    })
}

fn columns(rows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(cols)
    }
}

fn orthonormal_columns(rows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for c in cols {
        let mut w = c.clone();
        for _ in 0..2 {
            for q in &out {
                let p = q.dot(&w);
                w -= q * p;
            }
        }
        let n = w.norm();
        if n > 1e-12 {
            out.push(w / n);
        }
    }
    columns(rows, &out)
}

/// The model restricted to the range of `G`, with null-space directions
/// either eliminated (Schur complement) or dropped.
struct Reduced {
    factor: GramFactor,
    q: DMatrix<f64>,
    c: DVector<f64>,
    back: NullRecovery,
    reduced: bool,
}

enum NullRecovery {
    Zero,
    Schur {
        chol: Cholesky<f64, nalgebra::Dyn>,
        q_nr: DMatrix<f64>,
        c_n: DVector<f64>,
    },
}

impl Reduced {
    fn new(q: &DMatrix<f64>, c: &DVector<f64>, g: &DMatrix<f64>) -> Result<Self> {
        let factor = factor_gram(g)?;
        let q = symmetrize(q);
        let t = &factor.range;
        let q_rr = symmetrize(&(t.transpose() * &q * t));
        let c_r = t.transpose() * c;
        if factor.null.ncols() == 0 {
            return Ok(Self {
                factor,
                q: q_rr,
                c: c_r,
                back: NullRecovery::Zero,
                reduced: false,
            });
        }
        let n = &factor.null;
        let q_nn = symmetrize(&(n.transpose() * &q * n));
        let q_nr = n.transpose() * &q * t;
        let c_n = n.transpose() * c;
        let q_scale = 1.0 + q.norm();
        let c_scale = 1.0 + c.norm();
        let compatible = q_nn.norm() <= NULL_COUPLING_TOL * q_scale
            && q_nr.norm() <= NULL_COUPLING_TOL * q_scale
            && c_n.norm() <= NULL_COUPLING_TOL * c_scale;
        if compatible {
            return Ok(Self {
                factor,
                q: q_rr,
                c: c_r,
                back: NullRecovery::Zero,
                reduced: false,
            });
        }
        let nn_min = SymmetricEigen::new(q_nn.clone())
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if nn_min > NULL_COUPLING_TOL * q_scale {
            if let Some(chol) = Cholesky::new(q_nn) {
                let q_s = symmetrize(&(q_rr - q_nr.transpose() * chol.solve(&q_nr)));
                let c_s = c_r - q_nr.transpose() * chol.solve(&c_n);
                return Ok(Self {
                    factor,
                    q: q_s,
                    c: c_s,
                    back: NullRecovery::Schur { chol, q_nr, c_n },
                    reduced: false,
                });
            }
        }
        Ok(Self {
            factor,
            q: q_rr,
            c: c_r,
            back: NullRecovery::Zero,
            reduced: true,
        })
    }

    fn lift(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut alpha = &self.factor.range * y;
        if let NullRecovery::Schur { chol, q_nr, c_n } = &self.back {
            let z = -chol.solve(&(c_n + q_nr * y));
            alpha += &self.factor.null * z;
        }
        alpha
    }
}

fn check_shapes(q: &DMatrix<f64>, c: &DVector<f64>, g: &DMatrix<f64>, max_dim: usize) -> Result<()> {
    let j = c.len();
    if q.nrows() != j || q.ncols() != j {
        return Err(Error::DimensionMismatch { expected: j, got: q.nrows() });
    }
    if g.nrows() != j || g.ncols() != j {
        return Err(Error::DimensionMismatch { expected: j, got: g.nrows() });
    }
    if j > max_dim {
        return Err(Error::SubspaceTooLarge { dim: j, max: max_dim });
    }
    Ok(())
}

/// Global minimizer of `c^T a + a^T Q a / 2` subject to `|a|_G <= delta`.
pub fn solve_trs(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    delta: f64,
) -> Result<TrsSolution> {
    solve_trs_with_limit(q, c, g, delta, DEFAULT_MAX_DIM)
}

pub fn solve_trs_with_limit(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    delta: f64,
    max_dim: usize,
) -> Result<TrsSolution> {
    check_shapes(q, c, g, max_dim)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidConfig(format!("trust radius must be positive, got {delta}")));
    }
    if q.iter().chain(c.iter()).any(|v| !v.is_finite()) {
        return Err(Error::ModelBuildFailed("non-finite model entries"));
    }
    let red = Reduced::new(q, c, g)?;
    let ball = solve_ball(&red.q, &red.c, delta);
    let alpha = red.lift(&ball.y);
    let model_decrease = -model_value(q, c, &alpha);
    Ok(TrsSolution {
        alpha,
        lambda: ball.lambda,
        model_decrease,
        on_boundary: ball.on_boundary,
        hard_case: ball.hard_case,
        reduced: red.reduced,
    })
}

/// Minimizer of `c^T a + a^T Q a / 2 + mu |a|_G^2`, i.e. the solution of
/// `(Q + 2 mu G) a = -c`.
pub fn solve_regularized(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    g: &DMatrix<f64>,
    mu: f64,
) -> Result<DVector<f64>> {
    check_shapes(q, c, g, usize::MAX)?;
    if !(mu >= 0.0) {
        return Err(Error::InvalidConfig(format!("regularization must be nonnegative, got {mu}")));
    }
    let red = Reduced::new(q, c, g)?;
    if red.reduced {
        return Err(Error::RegularizedSingular);
    }
    let r = red.c.len();
    if r == 0 {
        return Ok(red.lift(&DVector::zeros(0)));
    }
    let m = &red.q + DMatrix::identity(r, r) * (2.0 * mu);
    let y = match Cholesky::new(m.clone()) {
        Some(ch) => ch.solve(&red.c),
        None => {
            let trace = m.trace().abs();
            let jitter = 1e-12 * if trace > 0.0 { trace } else { 1.0 };
            let shifted = m + DMatrix::identity(r, r) * jitter;
            Cholesky::new(shifted)
                .ok_or(Error::RegularizedSingular)?
                .solve(&red.c)
        }
    };
    let alpha = red.lift(&(-y));
    if alpha.iter().any(|v| !v.is_finite()) {
        return Err(Error::RegularizedSingular);
    }
    Ok(alpha)
}

/// Generalized eigenvalues of the pencil `(Q, G)` on the range of `G`,
/// ascending. These are the Rayleigh-quotient extremes of the Hessian over
/// the subspace when `Q` and `G` come from the same basis.
pub fn subspace_eigs(q: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<Vec<f64>> {
    if q.nrows() != g.nrows() || q.ncols() != g.ncols() || q.nrows() != q.ncols() {
        return Err(Error::DimensionMismatch { expected: g.nrows(), got: q.nrows() });
    }
    let f = factor_gram(g)?;
    let t = &f.range;
    let m = symmetrize(&(t.transpose() * symmetrize(q) * t));
    let mut eig: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().cloned().collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[derive(Debug, Clone)]
pub(crate) struct BallSolution {
    pub y: DVector<f64>,
    pub lambda: f64,
    pub on_boundary: bool,
    pub hard_case: bool,
}

/// Euclidean-ball TRS: minimize `c^T y + y^T Q y / 2` s.t. `|y| <= delta`.
pub(crate) fn solve_ball(q: &DMatrix<f64>, c: &DVector<f64>, delta: f64) -> BallSolution {
    let r = c.len();
    if r == 0 {
        return BallSolution {
            y: DVector::zeros(0),
            lambda: 0.0,
            on_boundary: false,
            hard_case: false,
        };
    }
    let eig = SymmetricEigen::new(symmetrize(q));
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let theta: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let w = DMatrix::from_columns(
        &order
            .iter()
            .map(|&k| eig.eigenvectors.column(k).into_owned())
            .collect::<Vec<_>>(),
    );
    let ch = w.transpose() * c;
    let ch_norm = ch.norm();
    let theta1 = theta[0];
    let q_scale = theta.iter().fold(0.0f64, |a, t| a.max(t.abs()));
    let from_coeffs = |coef: &DVector<f64>| &w * coef;

    // Interior Newton step.
    if theta1 > 0.0 {
        let coef = DVector::from_fn(r, |i, _| -ch[i] / theta[i]);
        if coef.norm() <= delta {
            return BallSolution {
                y: from_coeffs(&coef),
                lambda: 0.0,
                on_boundary: false,
                hard_case: false,
            };
        }
    }

    // Shifted multiplier t = lambda + theta1 keeps the pole at t = 0 exact.
    let gaps: Vec<f64> = theta.iter().map(|&t| t - theta1).collect();
    let group_tol = 1e-12 * q_scale;
    let in_group: Vec<bool> = gaps.iter().map(|&gp| gp <= group_tol).collect();

    if theta1 <= 0.0 {
        let group_c = (0..r)
            .filter(|&i| in_group[i])
            .map(|i| ch[i] * ch[i])
            .sum::<f64>()
            .sqrt();
        if group_c <= HARD_CASE_TOL * ch_norm {
            let lambda = -theta1;
            let mut coef = DVector::from_fn(r, |i, _| {
                if in_group[i] {
                    0.0
                } else {
                    -ch[i] / (gaps[i])
                }
            });
            let rest = coef.norm();
            if rest <= delta {
                if lambda > 0.0 {
                    let tau = (delta * delta - rest * rest).max(0.0).sqrt();
                    coef[0] = if ch[0] > 0.0 { -tau } else { tau };
                    return BallSolution {
                        y: from_coeffs(&coef),
                        lambda,
                        on_boundary: true,
                        hard_case: true,
                    };
                }
                return BallSolution {
                    y: from_coeffs(&coef),
                    lambda: 0.0,
                    on_boundary: false,
                    hard_case: false,
                };
            }
        }
    }

    let norm_at = |t: f64| -> f64 {
        (0..r)
            .map(|i| {
                let den = gaps[i] + t;
                let v = ch[i] / den;
                v * v
            })
            .sum::<f64>()
            .sqrt()
    };
    let mut lo = theta1.max(0.0);
    let mut hi = lo + ch_norm / delta;
    // |y(hi)| <= delta by construction; nudge if rounding says otherwise.
    while norm_at(hi) > delta {
        hi = hi * 2.0 + f64::MIN_POSITIVE;
    }
    let mut t = hi;
    for _ in 0..1000 {
        if !(t > lo && t <= hi) {
            t = 0.5 * (lo + hi);
        }
        let ny = norm_at(t);
        if !ny.is_finite() || ny > delta {
            lo = t;
        } else {
            hi = t;
        }
        if (ny - delta).abs() <= 1e-15 * delta || hi - lo <= 1e-15 * hi {
            break;
        }
        if ny.is_finite() && ny > 0.0 {
            // Newton on 1/|y(t)| - 1/delta.
            let dsum: f64 = (0..r)
                .map(|i| {
                    let den = gaps[i] + t;
                    ch[i] * ch[i] / (den * den * den)
                })
                .sum();
            let phi = 1.0 / ny - 1.0 / delta;
            let dphi = dsum / (ny * ny * ny);
            t = if dphi > 0.0 { t - phi / dphi } else { 0.5 * (lo + hi) };
        } else {
            t = 0.5 * (lo + hi);
        }
    }
    // Take whichever end of the bracket is feasible.
    let t = if norm_at(t) <= delta * (1.0 + 1e-14) { t } else { hi };
    let coef = DVector::from_fn(r, |i, _| -ch[i] / (gaps[i] + t));
    let lambda = (t - theta1).max(0.0);
    BallSolution {
        y: from_coeffs(&coef),
        lambda,
        on_boundary: true,
        hard_case: false,
    }
}
