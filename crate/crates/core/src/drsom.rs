//! The DRSOM iteration: a second-order step restricted to
//! `span{-g, d}` with `d` the previous accepted step.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corrector::{corrector_step, CorrectorParams};
use crate::error::{Error, Result};
use crate::model::{build_hvp, build_interp, InterpScale, ModelMethod, QuadModel};
use crate::problem::Objective;
use crate::report::{RunReport, Status, TraceRecord};
use crate::trs;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    TrustRadius,
    RadiusFree,
    /// Constant radius `2 sqrt(tol_g) / m_est`, every step accepted.
    FixedRadius,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrectorPolicy {
    Off,
    Periodic { period: usize, c: f64, j_max: usize },
}

impl CorrectorPolicy {
    pub fn periodic() -> Self {
        CorrectorPolicy::Periodic { period: 5, c: 1e2, j_max: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub mode: Mode,
    pub model_method: ModelMethod,
    pub tol_g: f64,
    pub max_iter: usize,
    pub eta: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma0: f64,
    pub gamma_min: f64,
    pub mu_m: f64,
    pub delta0: f64,
    pub delta_max: f64,
    /// Hessian-Lipschitz estimate, required by `FixedRadius`.
    pub m_est: Option<f64>,
    pub corrector: CorrectorPolicy,
    /// Seed for interpolation sample directions.
    pub seed: u64,
    /// Consecutive rejections before giving up.
    pub max_rejections: usize,
    pub time_limit: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mode: Mode::RadiusFree,
            model_method: ModelMethod::default(),
            tol_g: 1e-6,
            max_iter: 10_000,
            eta: 0.09,
            zeta1: 0.25,
            zeta2: 0.75,
            beta1: 0.5,
            beta2: 2.0,
            gamma0: 1e-3,
            gamma_min: 1e-12,
            mu_m: 1e3,
            delta0: 1.0,
            delta_max: 1e10,
            m_est: None,
            corrector: CorrectorPolicy::Off,
            seed: 0,
            max_rejections: 50,
            time_limit: None,
        }
    }
}

impl SolverConfig {
    /// Trust-region mode with interpolation samples kept inside the radius.
    pub fn trust_radius() -> Self {
        Self {
            mode: Mode::TrustRadius,
            model_method: ModelMethod::Interpolation { samples: 3, scale: InterpScale::TrustRadius },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.beta1 > 0.0 && self.beta1 < 1.0 && self.beta2 > 1.0) {
            return bad(format!("need 0 < beta1 < 1 < beta2, got {} and {}", self.beta1, self.beta2));
        }
        if !(0.0 <= self.eta && self.eta < self.zeta1 && self.zeta1 < self.zeta2 && self.zeta2 <= 1.0) {
            return bad(format!(
                "need 0 <= eta < zeta1 < zeta2 <= 1, got {}, {}, {}",
                self.eta, self.zeta1, self.zeta2
            ));
        }
        for (name, v) in [
            ("tol_g", self.tol_g),
            ("gamma0", self.gamma0),
            ("gamma_min", self.gamma_min),
            ("mu_m", self.mu_m),
            ("delta0", self.delta0),
            ("delta_max", self.delta_max),
        ] {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_rejections == 0 {
            return bad("max_rejections must be at least 1".into());
        }
        if self.mode == Mode::FixedRadius && !self.m_est.is_some_and(|m| m > 0.0 && m.is_finite()) {
            return bad("fixed_radius mode needs a positive m_est".into());
        }
        if let CorrectorPolicy::Periodic { period, c, j_max } = self.corrector {
            if period == 0 || j_max < 2 || !(c > 0.0) {
                return bad("corrector needs period >= 1, j_max >= 2 and c > 0".into());
            }
        }
        self.model_method.validate()
    }

    fn fixed_radius(&self) -> f64 {
        2.0 * self.tol_g.sqrt() / self.m_est.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: DVector<f64>,
    pub f: f64,
    pub g: DVector<f64>,
    /// `x_k - x_{k-1}`; zero before the first accepted step.
    pub d: DVector<f64>,
    pub delta: f64,
    pub gamma: f64,
    pub mu: f64,
    pub k: usize,
    pub last_rho: f64,
    pub last_lambda: f64,
    pub rejections: usize,
    last_step_norm: Option<f64>,
    last_corrector: Option<usize>,
    model: Option<QuadModel>,
    rng: ChaCha8Rng,
}

impl SolverState {
    pub fn new(obj: &Objective, x0: &DVector<f64>, config: &SolverConfig) -> Result<Self> {
        if x0.len() != obj.dim() {
            return Err(Error::DimensionMismatch { expected: obj.dim(), got: x0.len() });
        }
        let f = obj.value(x0);
        if !f.is_finite() || x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteStart);
        }
        let g = obj.gradient(x0);
        let delta = match config.mode {
            Mode::FixedRadius => config.fixed_radius(),
            _ => config.delta0,
        };
        Ok(Self {
            x: x0.clone(),
            f,
            g,
            d: DVector::zeros(x0.len()),
            delta,
            gamma: config.gamma0,
            mu: f64::NAN,
            k: 0,
            last_rho: f64::NAN,
            last_lambda: f64::NAN,
            rejections: 0,
            last_step_norm: None,
            last_corrector: None,
            model: None,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    pub fn gnorm(&self) -> f64 {
        self.g.norm()
    }

    fn radius_hint(&self, mode: Mode) -> Option<f64> {
        match mode {
            Mode::RadiusFree => self.last_step_norm,
            _ => Some(self.delta),
        }
    }
}

/// `d` is dropped from the model when `1 - |cos(g, d)|` falls below this.
pub const PARALLEL_TOL: f64 = 1e-8;

fn nearly_parallel(g: &DVector<f64>, d: &DVector<f64>) -> bool {
    let (gn, dn) = (g.norm(), d.norm());
    if !(dn > 0.0) {
        return false;
    }
    1.0 - (g.dot(d) / (gn * dn)).abs() <= PARALLEL_TOL
}

fn build_model(obj: &Objective, state: &mut SolverState, config: &SolverConfig) -> Result<QuadModel> {
    let mut d = state.d.clone();
    if nearly_parallel(&state.g, &d) {
        d.fill(0.0);
    }
    let model = match config.model_method {
        ModelMethod::HvpExact => build_hvp(obj, &state.x, &state.g, &d, state.f, true)?,
        ModelMethod::HvpFd => build_hvp(obj, &state.x, &state.g, &d, state.f, false)?,
        ModelMethod::Interpolation { samples, scale } => {
            let s = scale.resolve(state.radius_hint(config.mode));
            build_interp(obj, &state.x, &state.g, &d, state.f, samples, s, &mut state.rng, None)?
        }
    };
    if model.gram_rank < model.dim() {
        // Parallel directions: the span is one-dimensional.
        d.fill(0.0);
        return match config.model_method {
            ModelMethod::HvpExact => build_hvp(obj, &state.x, &state.g, &d, state.f, true),
            ModelMethod::HvpFd => build_hvp(obj, &state.x, &state.g, &d, state.f, false),
            ModelMethod::Interpolation { samples, scale } => {
                let s = scale.resolve(state.radius_hint(config.mode));
                build_interp(obj, &state.x, &state.g, &d, state.f, samples, s, &mut state.rng, None)
            }
        };
    }
    Ok(model)
}

/// `(mu, mu_lower, mu_upper)` of the radius-free rule for the current model.
pub fn radius_free_mu(model: &QuadModel, gamma: f64, mu_m: f64) -> Result<(f64, f64, f64)> {
    let eig = trs::subspace_eigs(&model.q, &model.gram)?;
    let (mu1, mu2) = match (eig.first(), eig.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::ModelBuildFailed("empty subspace")),
    };
    let lower = (-mu1).max(0.0);
    let upper = lower.max(mu2) + mu_m;
    let mu = gamma * upper + (1.0 - gamma).max(0.0) * lower;
    Ok((mu, lower, upper))
}

struct Trial {
    step: DVector<f64>,
    pred: f64,
    /// Multiplier of the step: `lambda` for ball constraints, `2 mu` for
    /// the regularized model.
    multiplier: f64,
    reported: f64,
    on_boundary: bool,
    dim: usize,
}

fn trial_step(obj: &Objective, state: &mut SolverState, config: &SolverConfig) -> Result<Option<Trial>> {
    if state.model.is_none() {
        state.model = Some(build_model(obj, state, config)?);
    }
    let model = state.model.as_ref().expect("model built above");
    let trial = match config.mode {
        Mode::TrustRadius | Mode::FixedRadius => {
            let sol = trs::solve_trs(&model.q, &model.c, &model.gram, state.delta)?;
            Trial {
                step: model.lift(&sol.alpha),
                pred: sol.model_decrease,
                multiplier: sol.lambda,
                reported: sol.lambda,
                on_boundary: sol.on_boundary,
                dim: model.dim(),
            }
        }
        Mode::RadiusFree => {
            let (mu, _, _) = radius_free_mu(model, state.gamma, config.mu_m)?;
            state.mu = mu;
            let alpha = match trs::solve_regularized(&model.q, &model.c, &model.gram, mu) {
                Ok(a) => a,
                Err(Error::RegularizedSingular) => return Ok(None),
                Err(e) => return Err(e),
            };
            Trial {
                step: model.lift(&alpha),
                pred: model.decrease(&alpha),
                multiplier: 2.0 * mu,
                reported: mu,
                on_boundary: false,
                dim: model.dim(),
            }
        }
    };
    Ok(Some(trial))
}

fn maybe_correct(obj: &Objective, state: &mut SolverState, config: &SolverConfig, trial: &mut Trial) -> Result<()> {
    let CorrectorPolicy::Periodic { period, c, j_max } = config.corrector else {
        return Ok(());
    };
    let due = state.last_corrector.is_none_or(|l| state.k - l >= period);
    if !due || trial.multiplier > config.tol_g.sqrt() || !(trial.step.norm() > 0.0) {
        return Ok(());
    }
    state.last_corrector = Some(state.k);
    let radius = match config.mode {
        Mode::RadiusFree => trial.step.norm(),
        _ => state.delta,
    };
    let params = CorrectorParams { radius, eps: config.tol_g, c, max_dim: j_max };
    let out = corrector_step(obj, &state.x, &state.g, &state.d, &trial.step, trial.multiplier, &params)?;
    if out.model_decrease > trial.pred && out.step.iter().all(|v| v.is_finite()) {
        trial.step = out.step;
        trial.pred = out.model_decrease;
        trial.multiplier = out.lambda;
        trial.on_boundary = out.on_boundary;
        trial.dim = out.subspace_dim;
    }
    Ok(())
}

/// One iteration. Returns the trace record; `state` is advanced in place.
pub fn step(obj: &Objective, state: &mut SolverState, config: &SolverConfig) -> Result<TraceRecord> {
    state.k += 1;
    let delta_used = state.delta;
    let trial = trial_step(obj, state, config)?;
    let mut trial = match trial {
        Some(t) => t,
        None => return Ok(reject_degenerate(state, config, delta_used)),
    };
    maybe_correct(obj, state, config, &mut trial)?;
    state.last_lambda = trial.reported;
    if !(trial.pred > 0.0) || !trial.pred.is_finite() {
        let mut rec = reject_degenerate(state, config, delta_used);
        rec.lambda_or_mu = trial.reported;
        rec.model_decrease = trial.pred;
        rec.step_norm = trial.step.norm();
        return Ok(rec);
    }

    let x_new = &state.x + &trial.step;
    let f_new = obj.value(&x_new);
    let rho = ratio(state.f, f_new, trial.pred);
    state.last_rho = rho;
    let accepted = match config.mode {
        Mode::FixedRadius => f_new.is_finite(),
        _ => rho > config.eta,
    };

    match config.mode {
        Mode::TrustRadius => {
            if !(rho >= config.zeta1) {
                state.delta *= config.beta1;
            } else if rho > config.zeta2 {
                state.delta = (state.delta * config.beta2).min(config.delta_max);
            }
        }
        Mode::RadiusFree => adapt_gamma(state, config, rho),
        Mode::FixedRadius => {}
    }

    let step_norm = trial.step.norm();
    if accepted {
        state.d = &x_new - &state.x;
        state.x = x_new;
        state.f = f_new;
        state.g = obj.gradient(&state.x);
        state.last_step_norm = Some(step_norm);
        state.rejections = 0;
        state.model = None;
    } else {
        state.rejections += 1;
        let rescaled = matches!(
            config.model_method,
            ModelMethod::Interpolation { scale: InterpScale::TrustRadius, .. }
        );
        if rescaled {
            state.model = None;
        }
    }
    Ok(TraceRecord {
        k: state.k,
        f: state.f,
        gnorm: state.gnorm(),
        lambda_or_mu: trial.reported,
        delta: if config.mode == Mode::RadiusFree { f64::NAN } else { delta_used },
        rho,
        step_norm,
        accepted,
        model_decrease: trial.pred,
        subspace_dim: trial.dim,
        on_boundary: trial.on_boundary,
    })
}

/// Reduction ratio. When `f` did not increase, a roundoff allowance is added
/// to both decreases so that steps below the resolution of `f` still count
/// as agreeing with the model.
fn ratio(f: f64, f_new: f64, pred: f64) -> f64 {
    if !f_new.is_finite() {
        return f64::NEG_INFINITY;
    }
    if f_new > f {
        return (f - f_new) / pred;
    }
    let slack = 10.0 * f64::EPSILON * f.abs().max(1.0);
    (f - f_new + slack) / (pred + slack)
}

fn adapt_gamma(state: &mut SolverState, config: &SolverConfig, rho: f64) {
    if !(rho > config.zeta1) {
        state.gamma *= config.beta2;
    } else if rho > config.zeta2 {
        state.gamma = config.gamma_min.max(state.gamma.sqrt().min(config.beta1 * state.gamma));
    }
}

fn reject_degenerate(state: &mut SolverState, config: &SolverConfig, delta_used: f64) -> TraceRecord {
    match config.mode {
        Mode::TrustRadius => state.delta *= config.beta1,
        Mode::RadiusFree => state.gamma *= config.beta2,
        Mode::FixedRadius => {}
    }
    state.rejections += 1;
    state.last_rho = f64::NAN;
    TraceRecord {
        k: state.k,
        f: state.f,
        gnorm: state.gnorm(),
        lambda_or_mu: f64::NAN,
        delta: if config.mode == Mode::RadiusFree { f64::NAN } else { delta_used },
        rho: f64::NAN,
        step_norm: 0.0,
        accepted: false,
        model_decrease: f64::NAN,
        subspace_dim: 0,
        on_boundary: false,
    }
}

pub fn minimize(obj: &Objective, x0: &DVector<f64>, config: &SolverConfig) -> Result<RunReport> {
    minimize_with(obj, x0, config, |_, _| {})
}

/// Like [`minimize`], calling `observe` after every iteration with the
/// updated state.
pub fn minimize_with<F>(obj: &Objective, x0: &DVector<f64>, config: &SolverConfig, mut observe: F) -> Result<RunReport>
where
    F: FnMut(&SolverState, &TraceRecord),
{
    config.validate()?;
    let clock = Instant::now();
    let mut state = SolverState::new(obj, x0, config)?;
    let gnorm_initial = state.gnorm();
    let mut trace = Vec::new();
    let mut message = None;
    let status = loop {
        if state.gnorm() <= config.tol_g {
            break Status::Converged;
        }
        if state.k >= config.max_iter {
            break Status::MaxIter;
        }
        if state.rejections >= config.max_rejections {
            break Status::Stalled;
        }
        if config.time_limit.is_some_and(|t| clock.elapsed().as_secs_f64() > t) {
            break Status::TimeLimit;
        }
        match step(obj, &mut state, config) {
            Ok(rec) => {
                observe(&state, &rec);
                trace.push(rec);
            }
            Err(e) => {
                message = Some(e.to_string());
                break Status::Error;
            }
        }
    };
    Ok(RunReport {
        status,
        f_final: state.f,
        gnorm_final: state.gnorm(),
        gnorm_initial,
        iterations: trace.len(),
        counts: obj.counts(),
        trace,
        wall_seconds: clock.elapsed().as_secs_f64(),
        message,
        x_final: state.x,
    })
}
