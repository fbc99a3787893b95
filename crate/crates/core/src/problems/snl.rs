//! Sensor network localization as nonlinear least squares.
//!
//! Unknowns are the planar coordinates of the non-anchor sensors, stacked
//! as `[x_0, y_0, x_1, y_1, ...]`. The objective sums
//! `(|x_i - x_j|^2 - d_ij^2)^2` over sensor-sensor edges and
//! `(|a_k - x_j|^2 - dbar_kj^2)^2` over anchor-sensor edges.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Problem;

const MIN_DISTANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnlParams {
    /// Total number of points, anchors included.
    pub n: usize,
    /// Number of anchors (the first `m` generated points).
    pub m: usize,
    pub radio_range: f64,
    pub noise: f64,
    pub seed: u64,
}

impl SnlParams {
    pub fn validate(&self) -> Result<()> {
        if self.m >= self.n {
            return Err(Error::InvalidInstance(format!(
                "need more points than anchors (n = {}, m = {})",
                self.n, self.m
            )));
        }
        if !(self.radio_range > 0.0) {
            return Err(Error::InvalidInstance("radio range must be positive".into()));
        }
        if !(self.noise >= 0.0) {
            return Err(Error::InvalidInstance("noise factor must be nonnegative".into()));
        }
        Ok(())
    }
}

/// An edge with its measured distance. For anchor edges `i` indexes the
/// sensor and `j` the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnlInstance {
    pub anchors: Vec<[f64; 2]>,
    pub sensor_edges: Vec<Edge>,
    pub anchor_edges: Vec<Edge>,
    /// Ground-truth sensor coordinates, for evaluation only.
    pub truth: Vec<[f64; 2]>,
}

impl SnlInstance {
    pub fn sensors(&self) -> usize {
        self.truth.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.sensors()
    }

    pub fn truth_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.truth.iter().flat_map(|p| p.iter().copied()))
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.sensors();
        for e in &self.sensor_edges {
            if e.i >= s || e.j >= s || e.i == e.j {
                return Err(Error::InvalidInstance(format!("bad sensor edge ({}, {})", e.i, e.j)));
            }
            if !(e.dist > 0.0) {
                return Err(Error::InvalidInstance("edge distances must be positive".into()));
            }
        }
        for e in &self.anchor_edges {
            if e.i >= s || e.j >= self.anchors.len() {
                return Err(Error::InvalidInstance(format!("bad anchor edge ({}, {})", e.i, e.j)));
            }
            if !(e.dist > 0.0) {
                return Err(Error::InvalidInstance("edge distances must be positive".into()));
            }
        }
        Ok(())
    }

    /// Root-mean-square position error of `x` against the ground truth.
    pub fn rmse(&self, x: &DVector<f64>) -> f64 {
        let s = self.sensors();
        let sum: f64 = (0..s)
            .map(|i| {
                let dx = x[2 * i] - self.truth[i][0];
                let dy = x[2 * i + 1] - self.truth[i][1];
                dx * dx + dy * dy
            })
            .sum();
        (sum / s as f64).sqrt()
    }

    pub fn objective(&self) -> SnlProblem {
        SnlProblem { inst: self.clone() }
    }
}

/// Points uniform in the unit square; the first `m` are anchors. Edges join
/// pairs within the radio range, with measured distance
/// `true * (1 + noise * N(0, 1))` floored at `1e-6`.
pub fn snl_generate(params: &SnlParams) -> Result<SnlInstance> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let points: Vec<[f64; 2]> = (0..params.n)
        .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let (anchors, truth) = points.split_at(params.m);
    let mut measure = |a: &[f64; 2], b: &[f64; 2]| -> Option<f64> {
        let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        if d > params.radio_range {
            return None;
        }
        let z: f64 = rng.sample(StandardNormal);
        Some((d * (1.0 + params.noise * z)).max(MIN_DISTANCE))
    };
    let mut sensor_edges = Vec::new();
    for i in 0..truth.len() {
        for j in i + 1..truth.len() {
            if let Some(dist) = measure(&truth[i], &truth[j]) {
                sensor_edges.push(Edge { i, j, dist });
            }
        }
    }
    let mut anchor_edges = Vec::new();
    for (k, a) in anchors.iter().enumerate() {
        for (i, t) in truth.iter().enumerate() {
            if let Some(dist) = measure(t, a) {
                anchor_edges.push(Edge { i, j: k, dist });
            }
        }
    }
    Ok(SnlInstance {
        anchors: anchors.to_vec(),
        sensor_edges,
        anchor_edges,
        truth: truth.to_vec(),
    })
}

#[derive(Debug, Clone)]
pub struct SnlProblem {
    inst: SnlInstance,
}

impl SnlProblem {
    pub fn instance(&self) -> &SnlInstance {
        &self.inst
    }

    fn sensor(x: &DVector<f64>, i: usize) -> [f64; 2] {
        [x[2 * i], x[2 * i + 1]]
    }

    /// Visit each edge as `(u, r, i, j)` with `u = x_i - (x_j or a_k)`,
    /// `r = |u|^2 - d^2` and `j = None` for anchor edges.
    fn for_each_edge(&self, x: &DVector<f64>, mut f: impl FnMut([f64; 2], f64, usize, Option<usize>)) {
        for e in &self.inst.sensor_edges {
            let (a, b) = (Self::sensor(x, e.i), Self::sensor(x, e.j));
            let u = [a[0] - b[0], a[1] - b[1]];
            let r = u[0] * u[0] + u[1] * u[1] - e.dist * e.dist;
            f(u, r, e.i, Some(e.j));
        }
        for e in &self.inst.anchor_edges {
            let a = Self::sensor(x, e.i);
            let b = self.inst.anchors[e.j];
            let u = [a[0] - b[0], a[1] - b[1]];
            let r = u[0] * u[0] + u[1] * u[1] - e.dist * e.dist;
            f(u, r, e.i, None);
        }
    }
}

impl Problem for SnlProblem {
    fn dim(&self) -> usize {
        self.inst.dim()
    }

    fn value(&self, x: &DVector<f64>) -> f64 {
        let mut total = 0.0;
        self.for_each_edge(x, |_, r, _, _| total += r * r);
        total
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.dim());
        self.for_each_edge(x, |u, r, i, j| {
            for k in 0..2 {
                let v = 4.0 * r * u[k];
                g[2 * i + k] += v;
                if let Some(j) = j {
                    g[2 * j + k] -= v;
                }
            }
        });
        g
    }

    fn hessian_vector(&self, x: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
        let mut hv = DVector::zeros(self.dim());
        self.for_each_edge(x, |u, r, i, j| {
            let w = match j {
                Some(j) => [v[2 * i] - v[2 * j], v[2 * i + 1] - v[2 * j + 1]],
                None => [v[2 * i], v[2 * i + 1]],
            };
            let uw = u[0] * w[0] + u[1] * w[1];
            for k in 0..2 {
                let t = 8.0 * u[k] * uw + 4.0 * r * w[k];
                hv[2 * i + k] += t;
                if let Some(j) = j {
                    hv[2 * j + k] -= t;
                }
            }
        });
        Some(hv)
    }

    fn has_exact_hvp(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(noise: f64, rd: f64) -> SnlParams {
        SnlParams { n: 30, m: 4, radio_range: rd, noise, seed: 5 }
    }

    #[test]
    fn noiseless_truth_is_a_zero() {
        let inst = snl_generate(&params(0.0, 0.5)).unwrap();
        let p = inst.objective();
        let x = inst.truth_vector();
        let edges = (inst.sensor_edges.len() + inst.anchor_edges.len()) as f64;
        assert!(p.value(&x) <= 1e-20 * edges);
        assert!(p.gradient(&x).norm() <= 1e-12);
        assert_eq!(inst.rmse(&x), 0.0);
    }

    #[test]
    fn zero_noise_keeps_true_distances() {
        let inst = snl_generate(&params(0.0, 0.5)).unwrap();
        for e in &inst.sensor_edges {
            let (a, b) = (inst.truth[e.i], inst.truth[e.j]);
            let d = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            assert!((d - e.dist).abs() < 1e-15);
            assert!(e.dist <= 0.5);
        }
    }

    #[test]
    fn full_range_gives_complete_graph() {
        let inst = snl_generate(&params(0.05, 2f64.sqrt() + 1e-9)).unwrap();
        let s = inst.sensors();
        assert_eq!(inst.sensor_edges.len(), s * (s - 1) / 2);
        assert_eq!(inst.anchor_edges.len(), s * inst.anchors.len());
    }

    #[test]
    fn single_anchor_circle() {
        let inst = SnlInstance {
            anchors: vec![[0.0, 0.0]],
            sensor_edges: vec![],
            anchor_edges: vec![Edge { i: 0, j: 0, dist: 1.0 }],
            truth: vec![[1.0, 0.0]],
        };
        let p = inst.objective();
        for t in [0.0f64, 0.7, 2.0, 4.0] {
            let x = DVector::from_vec(vec![t.cos(), t.sin()]);
            assert!(p.value(&x) < 1e-28);
            assert!(p.gradient(&x).norm() < 1e-13);
        }
        let x = DVector::from_vec(vec![0.5, 0.5]);
        assert!((p.value(&x) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn invalid_params() {
        assert!(snl_generate(&SnlParams { m: 30, ..params(0.0, 0.5) }).is_err());
    }
}
