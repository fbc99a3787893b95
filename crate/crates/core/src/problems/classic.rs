//! Classic unconstrained test functions, all with analytic gradients and
//! exact Hessian-vector products.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::problem::{Objective, Problem};

/// `f(x) = x^T A x / 2 - b^T x` with symmetric `A`.
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl DenseQuadratic {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Self {
        assert_eq!(a.nrows(), b.len());
        let a = (&a + a.transpose()) * 0.5;
        Self { a, b }
    }

    /// Diagonal quadratic with eigenvalues log-spaced in `[1, cond]` and
    /// minimizer at the all-ones vector.
    pub fn ill_conditioned(n: usize, cond: f64) -> Self {
        let diag = DVector::from_fn(n, |i, _| {
            if n == 1 {
                1.0
            } else {
                cond.powf(i as f64 / (n - 1) as f64)
            }
        });
        let a = DMatrix::from_diagonal(&diag);
        let b = &a * DVector::from_element(n, 1.0);
        Self { a, b }
    }

    /// Random SPD matrix `Q diag(s) Q^T` with spectrum in `[lo, hi]`.
    pub fn random_spd(n: usize, lo: f64, hi: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let q = m.qr().q();
        let s = DVector::from_fn(n, |_, _| lo + (hi - lo) * rng.random::<f64>());
        let a = &q * DMatrix::from_diagonal(&s) * q.transpose();
        let b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::new(a, b)
    }

    pub fn minimizer(&self) -> Option<DVector<f64>> {
        self.a.clone().cholesky().map(|c| c.solve(&self.b))
    }
}

impl Problem for DenseQuadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x)
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x - &self.b
    }

    fn hessian_vector(&self, _x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        Some(&self.a * v)
    }

    fn has_exact_hvp(&self) -> bool {
        true
    }
}

/// Extended Rosenbrock, `sum 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
#[derive(Debug, Clone, Copy)]
pub struct Rosenbrock {
    n: usize,
}

impl Rosenbrock {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "Rosenbrock needs at least two variables");
        Self { n }
    }

    pub fn start(&self) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| if i % 2 == 0 { -1.2 } else { 1.0 })
    }
}

impl Problem for Rosenbrock {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (0..self.n - 1)
            .map(|i| {
                let a = x[i + 1] - x[i] * x[i];
                let b = 1.0 - x[i];
                100.0 * a * a + b * b
            })
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.n);
        for i in 0..self.n - 1 {
            let a = x[i + 1] - x[i] * x[i];
            g[i] += -400.0 * a * x[i] - 2.0 * (1.0 - x[i]);
            g[i + 1] += 200.0 * a;
        }
        g
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let mut hv = DVector::zeros(self.n);
        for i in 0..self.n - 1 {
            let hii = 1200.0 * x[i] * x[i] - 400.0 * x[i + 1] + 2.0;
            let hij = -400.0 * x[i];
            hv[i] += hii * v[i] + hij * v[i + 1];
            hv[i + 1] += hij * v[i] + 200.0 * v[i + 1];
        }
        Some(hv)
    }

    fn has_exact_hvp(&self) -> bool {
        true
    }
}

/// Beale's function on `R^2`; minimum `f(3, 0.5) = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Beale;

const BEALE_C: [f64; 3] = [1.5, 2.25, 2.625];

impl Problem for Beale {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        (0..3)
            .map(|k| {
                let r = BEALE_C[k] - x[0] + x[0] * x[1].powi(k as i32 + 1);
                r * r
            })
            .sum()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(2);
        for (k, c) in BEALE_C.iter().enumerate() {
            let p = k as i32 + 1;
            let r = c - x[0] + x[0] * x[1].powi(p);
            g[0] += 2.0 * r * (x[1].powi(p) - 1.0);
            g[1] += 2.0 * r * x[0] * p as f64 * x[1].powi(p - 1);
        }
        g
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let (mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0);
        for (k, c) in BEALE_C.iter().enumerate() {
            let p = k as i32 + 1;
            let pf = p as f64;
            let yp = x[1].powi(p);
            let r = c - x[0] + x[0] * yp;
            let r0 = yp - 1.0;
            let r1 = x[0] * pf * x[1].powi(p - 1);
            let r01 = pf * x[1].powi(p - 1);
            let r11 = if p >= 2 { x[0] * pf * (pf - 1.0) * x[1].powi(p - 2) } else { 0.0 };
            h00 += 2.0 * r0 * r0;
            h01 += 2.0 * (r0 * r1 + r * r01);
            h11 += 2.0 * (r1 * r1 + r * r11);
        }
        Some(DVector::from_vec(vec![h00 * v[0] + h01 * v[1], h01 * v[0] + h11 * v[1]]))
    }

    fn has_exact_hvp(&self) -> bool {
        true
    }
}

/// Himmelblau's function `(x^2 + y - 11)^2 + (x + y^2 - 7)^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Himmelblau;

impl Himmelblau {
    /// The four global minima (value 0).
    pub const MINIMA: [[f64; 2]; 4] = [
        [3.0, 2.0],
        [-2.805118086952745, 3.131312518250573],
        [-3.779310253377747, -3.28318599128617],
        [3.584428340330492, -1.848126526964404],
    ];
}

impl Problem for Himmelblau {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let a = x[0] * x[0] + x[1] - 11.0;
        let b = x[0] + x[1] * x[1] - 7.0;
        a * a + b * b
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let a = x[0] * x[0] + x[1] - 11.0;
        let b = x[0] + x[1] * x[1] - 7.0;
        DVector::from_vec(vec![4.0 * a * x[0] + 2.0 * b, 2.0 * a + 4.0 * b * x[1]])
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let a = x[0] * x[0] + x[1] - 11.0;
        let b = x[0] + x[1] * x[1] - 7.0;
        let h00 = 4.0 * a + 8.0 * x[0] * x[0] + 2.0;
        let h01 = 4.0 * x[0] + 4.0 * x[1];
        let h11 = 2.0 + 4.0 * b + 8.0 * x[1] * x[1];
        Some(DVector::from_vec(vec![h00 * v[0] + h01 * v[1], h01 * v[0] + h11 * v[1]]))
    }

    fn has_exact_hvp(&self) -> bool {
        true
    }
}

/// `f(x) = y^T A y / 2 + b^T y + (w / 4) sum y_i^4` with `y = x - center`.
///
/// With `A` indefinite this is a nonconvex quartic; with `A` positive
/// definite and `b = 0` it is strongly convex with minimizer `center`.
#[derive(Debug, Clone)]
pub struct Quartic {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub center: DVector<f64>,
    pub weight: f64,
}

impl Quartic {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, center: DVector<f64>, weight: f64) -> Self {
        let a = (&a + a.transpose()) * 0.5;
        Self { a, b, center, weight }
    }

    /// Random symmetric `A` with entries `N(0, 1)`, random `b`, unit weight.
    pub fn random_nonconvex(n: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Self::new(m, b, DVector::zeros(n), 1.0)
    }
}

impl Problem for Quartic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let y = x - &self.center;
        0.5 * y.dot(&(&self.a * &y)) + self.b.dot(&y) + 0.25 * self.weight * y.iter().map(|v| v.powi(4)).sum::<f64>()
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let y = x - &self.center;
        &self.a * &y + &self.b + y.map(|v| self.weight * v * v * v)
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let y = x - &self.center;
        let diag = y.map(|t| 3.0 * self.weight * t * t);
        Some(&self.a * v + diag.component_mul(v))
    }

    fn has_exact_hvp(&self) -> bool {
        true
    }
}

/// A named entry of [`classic_suite`].
pub struct NamedProblem {
    pub name: String,
    pub objective: Objective,
    pub start: DVector<f64>,
    /// Known minimizers, where available.
    pub minima: Vec<DVector<f64>>,
}

/// Extended Rosenbrock, an ill-conditioned quadratic, Beale, Himmelblau
/// and a random nonconvex quartic.
pub fn classic_suite(n: usize, cond: f64, seed: u64) -> Vec<NamedProblem> {
    let rosen = Rosenbrock::new(n.max(2));
    let quad = DenseQuadratic::ill_conditioned(n, cond);
    vec![
        NamedProblem {
            name: format!("rosenbrock-{}", n.max(2)),
            start: rosen.start(),
            minima: vec![DVector::from_element(n.max(2), 1.0)],
            objective: Objective::new(rosen),
        },
        NamedProblem {
            name: format!("quadratic-{n}"),
            start: DVector::zeros(n),
            minima: vec![DVector::from_element(n, 1.0)],
            objective: Objective::new(quad),
        },
        NamedProblem {
            name: "beale".into(),
            start: DVector::from_vec(vec![1.0, 1.0]),
            minima: vec![DVector::from_vec(vec![3.0, 0.5])],
            objective: Objective::new(Beale),
        },
        NamedProblem {
            name: "himmelblau".into(),
            start: DVector::from_vec(vec![0.0, 0.0]),
            minima: Himmelblau::MINIMA.iter().map(|m| DVector::from_row_slice(m)).collect(),
            objective: Objective::new(Himmelblau),
        },
        NamedProblem {
            name: format!("quartic-{n}"),
            start: DVector::zeros(n),
            minima: vec![],
            objective: Objective::new(Quartic::random_nonconvex(n, seed)),
        },
    ]
}

/// Look up a classic problem by name (`rosenbrock`, `quadratic`, `beale`,
/// `himmelblau`, `quartic`).
pub fn by_name(name: &str, n: usize, cond: f64, seed: u64) -> Option<NamedProblem> {
    let key = name.to_ascii_lowercase();
    classic_suite(n, cond, seed)
        .into_iter()
        .find(|p| p.name == key || p.name.split('-').next() == Some(key.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock_minimum() {
        let r = Rosenbrock::new(5);
        let ones = DVector::from_element(5, 1.0);
        assert_eq!(r.value(&ones), 0.0);
        assert_eq!(r.gradient(&ones).norm(), 0.0);
    }

    #[test]
    fn quadratic_condition_number() {
        let q = DenseQuadratic::ill_conditioned(6, 1e4);
        let d = q.a.diagonal();
        assert!((d.max() / d.min() - 1e4).abs() < 1e-8);
        let xs = q.minimizer().unwrap();
        assert!((xs - DVector::from_element(6, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn himmelblau_minima_are_stationary() {
        for m in Himmelblau::MINIMA {
            let x = DVector::from_row_slice(&m);
            assert!(Himmelblau.value(&x) < 1e-20);
            assert!(Himmelblau.gradient(&x).norm() < 1e-10);
        }
    }

    #[test]
    fn beale_minimum() {
        let x = DVector::from_vec(vec![3.0, 0.5]);
        assert_eq!(Beale.value(&x), 0.0);
        assert!(Beale.gradient(&x).norm() < 1e-15);
    }

    #[test]
    fn lookup_by_name() {
        assert_eq!(by_name("rosenbrock", 4, 10.0, 0).unwrap().objective.dim(), 4);
        assert_eq!(by_name("beale", 4, 10.0, 0).unwrap().objective.dim(), 2);
        assert!(by_name("nope", 4, 10.0, 0).is_none());
    }
}
