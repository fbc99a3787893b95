//! Line searches along a descent direction `p`, with `phi(a) = f(x + a p)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::Objective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineSearchKind {
    ArmijoBacktracking,
    StrongWolfe,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchSpec {
    pub kind: LineSearchKind,
    pub c1: f64,
    pub c2: f64,
    pub shrink: f64,
    pub max_evals: usize,
    /// After a strong-Wolfe point is found, try one secant step on `phi'`.
    /// On quadratics this lands on the exact line minimizer.
    pub refine: bool,
}

impl LineSearchSpec {
    pub fn armijo() -> Self {
        Self {
            kind: LineSearchKind::ArmijoBacktracking,
            c1: 1e-4,
            c2: 0.9,
            shrink: 0.5,
            max_evals: 60,
            refine: false,
        }
    }

    pub fn wolfe(c2: f64) -> Self {
        Self { kind: LineSearchKind::StrongWolfe, c2, ..Self::armijo() }
    }

    /// Strong Wolfe with `c2 = 0.1` and refinement.
    pub fn cg_default() -> Self {
        Self { refine: true, ..Self::wolfe(0.1) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) || self.max_evals == 0 {
            return Err(Error::InvalidConfig("need shrink in (0, 1) and max_evals >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub alpha: f64,
    pub x: DVector<f64>,
    pub f: f64,
    pub g: DVector<f64>,
    pub evals: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LineSearchFailure {
    pub evals: usize,
}

struct Point {
    a: f64,
    x: DVector<f64>,
    f: f64,
    g: DVector<f64>,
    dphi: f64,
}

struct Line<'a> {
    obj: &'a Objective,
    x: &'a DVector<f64>,
    p: &'a DVector<f64>,
    evals: usize,
}

impl Line<'_> {
    fn eval(&mut self, a: f64) -> Point {
        self.evals += 1;
        let x = self.x + self.p * a;
        let f = self.obj.value(&x);
        let g = self.obj.gradient(&x);
        let dphi = g.dot(self.p);
        Point { a, x, f, g, dphi }
    }
}

/// Minimizer of the cubic through two points with slopes, safeguarded into
/// the middle 80% of the bracket.
fn cubic_step(lo: &Point, hi: &Point) -> f64 {
    let (a, b) = (lo.a, hi.a);
    let d1 = lo.dphi + hi.dphi - 3.0 * (lo.f - hi.f) / (a - b);
    let disc = d1 * d1 - lo.dphi * hi.dphi;
    let mid = 0.5 * (a + b);
    if !(disc >= 0.0) {
        return mid;
    }
    let d2 = (b - a).signum() * disc.sqrt();
    let t = b - (b - a) * (hi.dphi + d2 - d1) / (hi.dphi - lo.dphi + 2.0 * d2);
    let (left, right) = (a.min(b), a.max(b));
    let margin = 0.1 * (right - left);
    if t.is_finite() && t >= left + margin && t <= right - margin {
        t
    } else {
        mid
    }
}

pub fn line_search(
    obj: &Objective,
    x: &DVector<f64>,
    f0: f64,
    g0: &DVector<f64>,
    p: &DVector<f64>,
    alpha0: f64,
    spec: &LineSearchSpec,
) -> std::result::Result<LineSearchResult, LineSearchFailure> {
    let dphi0 = g0.dot(p);
    if !(dphi0 < 0.0) {
        return Err(LineSearchFailure { evals: 0 });
    }
    let mut line = Line { obj, x, p, evals: 0 };
    let found = match spec.kind {
        LineSearchKind::ArmijoBacktracking => armijo(&mut line, f0, dphi0, alpha0, spec),
        LineSearchKind::StrongWolfe => wolfe(&mut line, f0, dphi0, alpha0, spec),
    };
    let Some(mut pt) = found else {
        return Err(LineSearchFailure { evals: line.evals });
    };
    if spec.refine && pt.dphi != 0.0 && pt.dphi - dphi0 > 0.0 {
        let a = pt.a * dphi0 / (dphi0 - pt.dphi);
        if a.is_finite() && a > 0.0 {
            let cand = line.eval(a);
            if cand.f.is_finite()
                && cand.f <= f0 + spec.c1 * a * dphi0
                && cand.f < f0
                && cand.dphi.abs() <= pt.dphi.abs()
            {
                pt = cand;
            }
        }
    }
    Ok(LineSearchResult { alpha: pt.a, x: pt.x, f: pt.f, g: pt.g, evals: line.evals })
}

fn armijo(line: &mut Line, f0: f64, dphi0: f64, alpha0: f64, spec: &LineSearchSpec) -> Option<Point> {
    let mut a = alpha0;
    while line.evals < spec.max_evals {
        let pt = line.eval(a);
        if pt.f.is_finite() && pt.f <= f0 + spec.c1 * a * dphi0 && pt.f < f0 {
            return Some(pt);
        }
        a *= spec.shrink;
    }
    None
}

fn wolfe(line: &mut Line, f0: f64, dphi0: f64, alpha0: f64, spec: &LineSearchSpec) -> Option<Point> {
    let armijo_ok = |pt: &Point| pt.f.is_finite() && pt.f <= f0 + spec.c1 * pt.a * dphi0;
    let curvature_ok = |pt: &Point| pt.dphi.abs() <= -spec.c2 * dphi0;
    let mut prev = Point { a: 0.0, x: line.x.clone(), f: f0, g: DVector::zeros(0), dphi: dphi0 };
    let mut a = alpha0;
    let mut first = true;
    while line.evals < spec.max_evals {
        let cur = line.eval(a);
        if !cur.f.is_finite() {
            // Overshoot into a non-finite region: back off.
            a = 0.5 * (prev.a + a);
            continue;
        }
        if !armijo_ok(&cur) || (!first && cur.f >= prev.f) {
            return zoom(line, f0, dphi0, spec, prev, cur);
        }
        if curvature_ok(&cur) {
            return Some(cur);
        }
        if cur.dphi >= 0.0 {
            return zoom(line, f0, dphi0, spec, cur, prev);
        }
        first = false;
        a = 2.0 * cur.a;
        prev = cur;
    }
    None
}

fn zoom(
    line: &mut Line,
    f0: f64,
    dphi0: f64,
    spec: &LineSearchSpec,
    mut lo: Point,
    mut hi: Point,
) -> Option<Point> {
    while line.evals < spec.max_evals {
        if (hi.a - lo.a).abs() <= 1e-16 * lo.a.abs().max(hi.a.abs()) {
            break;
        }
        let a = cubic_step(&lo, &hi);
        let cur = line.eval(a);
        if !cur.f.is_finite() || cur.f > f0 + spec.c1 * a * dphi0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.dphi.abs() <= -spec.c2 * dphi0 {
                return Some(cur);
            }
            if cur.dphi * (hi.a - lo.a) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Budget exhausted: settle for the best sufficient-decrease point.
    (lo.a > 0.0 && lo.f < f0).then_some(lo)
}
