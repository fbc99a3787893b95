//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if a criterion outside `EXPECTED_FAILURES` fails.

use std::time::Instant;

use ::drsom::baselines::{gd_minimize, BaselineOptions, LineSearchSpec};
use ::drsom::corrector::{corrector_step, residual, CorrectorParams, Subspace};
use ::drsom::drsom::{minimize_with, step};
use ::drsom::model::{build_hvp, build_interp};
use ::drsom::problems::{classic, lp_generate, snl_generate, DenseQuadratic, LpParams, Quartic, SnlParams};
use ::drsom::trs::{gram_norm, kkt_report, model_value, solve_trs};
use ::drsom::{minimize, CorrectorPolicy, Mode, ModelMethod, Objective, SolverConfig, SolverState};
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The stated boundary identity omits the curvature term
/// `alpha^T (Q + lambda G) alpha / 2`, so it cannot hold in general.
const EXPECTED_FAILURES: [usize; 1] = [3];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| gauss(rng))
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| gauss(rng));
    (&m + m.transpose()) * 0.5
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| gauss(rng)).qr().q()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

// 1. DRSOM with an inactive trust region reproduces linear CG on quadratics.

fn linear_cg(a: &DMatrix<f64>, grad0: &DVector<f64>, x0: &DVector<f64>, iters: usize) -> Vec<DVector<f64>> {
    let mut x = x0.clone();
    let mut g = grad0.clone();
    let mut p = -&g;
    let mut out = Vec::new();
    for _ in 0..iters {
        let ap = a * &p;
        let gg = g.dot(&g);
        if gg == 0.0 {
            break;
        }
        let alpha = gg / p.dot(&ap);
        x += &p * alpha;
        g += ap * alpha;
        out.push(x.clone());
        let beta = g.dot(&g) / gg;
        p = -&g + p * beta;
    }
    out
}

fn criterion_cg() -> Outcome {
    let clock = Instant::now();
    let mut worst = 0.0f64;
    let mut slow = 0;
    for i in 0..50u64 {
        let n = [5, 20, 50][i as usize % 3];
        let q = DenseQuadratic::random_spd(n, 1.0, 10.0, 1000 + i);
        let a = q.a.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(i);
        let x0 = random_vec(&mut rng, n);
        let obj = Objective::new(q);
        let g0 = obj.gradient(&x0);
        // Below this the change in f is at rounding level and the ratio test
        // can no longer tell steps apart.
        let tol = 1e-8 * g0.norm();
        let reference = linear_cg(&a, &g0, &x0, n);
        let cfg = SolverConfig {
            mode: Mode::TrustRadius,
            model_method: ModelMethod::HvpExact,
            delta0: 1e9,
            eta: 0.0,
            tol_g: tol,
            ..SolverConfig::default()
        };
        let mut state = SolverState::new(&obj, &x0, &cfg).unwrap();
        let mut accepted = 0;
        while state.gnorm() > tol && state.k < 2 * n {
            let rec = step(&obj, &mut state, &cfg).unwrap();
            if !rec.accepted {
                continue;
            }
            if let Some(xr) = reference.get(accepted) {
                let dev = (&state.x - xr).norm() / (1.0 + xr.norm());
                worst = worst.max(dev);
            }
            accepted += 1;
        }
        if state.gnorm() > tol || accepted > n {
            slow += 1;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-7 && slow == 0 && secs < 5.0,
        format!("max relative deviation {worst:.2e}, {slow} runs beyond n iterations, {secs:.2}s"),
    )
}

// 2. Two-dimensional trust-region solutions against an independent oracle.

struct Case {
    q: DMatrix<f64>,
    c: DVector<f64>,
    g: DMatrix<f64>,
    delta: f64,
}

/// Minimum of `c^T y + y^T Q y / 2` over the disc `|y| <= delta`: the
/// interior stationary point when `Q` is positive definite, and a fine
/// grid in angle on the circle refined by golden-section search.
fn disc_oracle(q: &DMatrix<f64>, c: &DVector<f64>, delta: f64) -> f64 {
    let (q00, q01, q11, c0, c1) = (q[(0, 0)], 0.5 * (q[(0, 1)] + q[(1, 0)]), q[(1, 1)], c[0], c[1]);
    let phi = |t: f64| {
        let (y0, y1) = (delta * t.cos(), delta * t.sin());
        c0 * y0 + c1 * y1 + 0.5 * (q00 * y0 * y0 + 2.0 * q01 * y0 * y1 + q11 * y1 * y1)
    };
    let grid = 4096;
    let step = std::f64::consts::TAU / grid as f64;
    let mut best = f64::INFINITY;
    let vals: Vec<f64> = (0..grid).map(|k| phi(k as f64 * step)).collect();
    for k in 0..grid {
        let (l, r) = (vals[(k + grid - 1) % grid], vals[(k + 1) % grid]);
        if vals[k] <= l && vals[k] <= r {
            let (mut a, mut b) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
            let inv = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..80 {
                let m1 = b - inv * (b - a);
                let m2 = a + inv * (b - a);
                if phi(m1) < phi(m2) {
                    b = m2;
                } else {
                    a = m1;
                }
            }
            best = best.min(phi(0.5 * (a + b)));
        }
    }
    let eig = SymmetricEigen::new(q.clone()).eigenvalues;
    if eig.min() > 0.0 {
        let y = -q.clone().try_inverse().unwrap() * c;
        if y.norm() <= delta {
            best = best.min(c.dot(&y) + 0.5 * y.dot(&(q * &y)));
        }
    }
    best.min(0.0)
}

/// Oracle for the rank-one metric `G = s u u^T`: with `alpha = a u + t v`,
/// the free coordinate `t` is eliminated in closed form and the remaining
/// quadratic in `a` is minimized over `|a| <= delta / sqrt(s)`.
fn rank_one_oracle(q: &DMatrix<f64>, c: &DVector<f64>, u: &DVector<f64>, s: f64, delta: f64) -> f64 {
    let v = DVector::from_vec(vec![-u[1], u[0]]);
    let (quu, quv, qvv) = (u.dot(&(q * u)), u.dot(&(q * &v)), v.dot(&(q * &v)));
    let (cu, cv) = (c.dot(u), c.dot(&v));
    let kappa = quu - quv * quv / qvv;
    let lin = cu - cv * quv / qvv;
    let konst = -cv * cv / (2.0 * qvv);
    let val = |a: f64| lin * a + 0.5 * kappa * a * a + konst;
    let bound = delta / s.sqrt();
    let mut best = val(bound).min(val(-bound));
    if kappa > 0.0 && (lin / kappa).abs() <= bound {
        best = best.min(val(-lin / kappa));
    }
    best
}

fn trs_case(rng: &mut ChaCha8Rng, kind: usize) -> (Case, f64) {
    let delta = 0.1 + 2.9 * rng.random::<f64>();
    if kind == 4 {
        let t = rng.random::<f64>() * std::f64::consts::TAU;
        let u = DVector::from_vec(vec![t.cos(), t.sin()]);
        let v = DVector::from_vec(vec![-u[1], u[0]]);
        let s = 0.5 + 1.5 * rng.random::<f64>();
        let mut q = random_sym(rng, 2);
        let qvv = v.dot(&(&q * &v));
        q += &v * v.transpose() * (0.5 + rng.random::<f64>() - qvv.min(0.0));
        let c = random_vec(rng, 2);
        let g = &u * u.transpose() * s;
        let best = rank_one_oracle(&q, &c, &u, s, delta);
        return (Case { q, c, g, delta }, best);
    }
    let l = DMatrix::from_fn(2, 2, |r, k| match r.cmp(&k) {
        std::cmp::Ordering::Greater => 0.5 * gauss(rng),
        std::cmp::Ordering::Equal => 0.5 + rng.random::<f64>(),
        std::cmp::Ordering::Less => 0.0,
    });
    let rot = random_orthogonal(rng, 2);
    let (qt, ct) = match kind {
        0 => {
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![0.1 + rng.random::<f64>(), 0.1 + 2.0 * rng.random::<f64>()]));
            (&rot * d * rot.transpose(), random_vec(rng, 2))
        }
        1 => {
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.1 - rng.random::<f64>(), 0.1 + rng.random::<f64>()]));
            (&rot * d * rot.transpose(), random_vec(rng, 2))
        }
        2 => {
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-0.1 - rng.random::<f64>(), -0.1 - rng.random::<f64>()]));
            (&rot * d * rot.transpose(), random_vec(rng, 2) * 1e-3)
        }
        _ => {
            // Hard case: the linear term has no component along the
            // leftmost eigenvector and is too small to reach the boundary.
            let l1 = -0.5 - rng.random::<f64>();
            let l2 = l1 + 0.5 + rng.random::<f64>();
            let d = DMatrix::from_diagonal(&DVector::from_vec(vec![l1, l2]));
            let e2 = rot.column(1).into_owned();
            let size = 0.5 * (l2 - l1) * delta * rng.random::<f64>();
            (&rot * d * rot.transpose(), e2 * size)
        }
    };
    let q = &l * &qt * l.transpose();
    let c = &l * &ct;
    let g = &l * l.transpose();
    // Independent reduction through the Cholesky factor of G.
    let chol = Cholesky::new(g.clone()).unwrap().l();
    let linv = chol.clone().try_inverse().unwrap();
    let q_disc = &linv * &q * linv.transpose();
    let c_disc = &linv * &c;
    let best = disc_oracle(&((&q_disc + q_disc.transpose()) * 0.5), &c_disc, delta);
    (Case { q, c, g, delta }, best)
}

fn criterion_trs() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut worst, mut kkt_fail, mut infeasible) = (0.0f64, 0, 0);
    for i in 0..1000 {
        let (case, best) = trs_case(&mut rng, i % 5);
        let sol = solve_trs(&case.q, &case.c, &case.g, case.delta).unwrap();
        let val = model_value(&case.q, &case.c, &sol.alpha);
        worst = worst.max((val - best).abs());
        if !kkt_report(&case.q, &case.c, &case.g, case.delta, &sol).holds(case.c.norm(), case.delta) {
            kkt_fail += 1;
        }
        if gram_norm(&case.g, &sol.alpha) > case.delta * (1.0 + 1e-8) {
            infeasible += 1;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-6 && kkt_fail == 0 && infeasible == 0 && secs < 10.0,
        format!("max |value - oracle| {worst:.2e}, {kkt_fail} KKT failures, {infeasible} infeasible, {secs:.2}s"),
    )
}

// 3. Boundary steps: decrease against lambda delta^2 / 2.

fn boundary_runs() -> Vec<(Objective, DVector<f64>)> {
    let mut runs = Vec::new();
    for seed in 1..=5 {
        let lp = lp_generate(&LpParams { n: 300, m: 100, r: 0.15, p: 0.5, eps: 0.1, seed }).unwrap();
        runs.push((Objective::new(lp.objective()), DVector::zeros(100)));
        let snl = snl_generate(&SnlParams { n: 80, m: 5, radio_range: 0.5, noise: 0.05, seed }).unwrap();
        let dim = snl.dim();
        runs.push((Objective::new(snl.objective()), DVector::zeros(dim)));
    }
    for p in classic::classic_suite(10, 1e3, 7) {
        runs.push((p.objective, p.start));
    }
    runs
}

fn criterion_boundary_identity() -> Outcome {
    let (mut steps, mut violations, mut worst) = (0, 0, 0.0f64);
    for method in [ModelMethod::HvpExact, SolverConfig::trust_radius().model_method] {
        for (obj, x0) in boundary_runs() {
            let cfg = SolverConfig { model_method: method, max_iter: 2000, tol_g: 1e-6, ..SolverConfig::trust_radius() };
            let report = minimize(&obj, &x0, &cfg).unwrap();
            for r in report.trace.iter().filter(|r| r.on_boundary && r.lambda_or_mu > 0.0) {
                steps += 1;
                let stated = 0.5 * r.lambda_or_mu * r.delta * r.delta;
                let gap = (r.model_decrease - stated).abs() / (1.0 + r.model_decrease.abs());
                worst = worst.max(gap);
                if gap > 1e-8 {
                    violations += 1;
                }
            }
        }
    }
    outcome(
        steps > 0 && violations == 0,
        format!("{violations} of {steps} boundary steps violate, max relative gap {worst:.2e}"),
    )
}

// 4. Fixed-radius decrease on a quadratic plus quartic.

fn criterion_fixed_radius() -> Outcome {
    let n = 10;
    let eps = 1e-4;
    let weight = 1.0;
    // The Hessian A + 3 w diag(x^2) is 6 w R Lipschitz on |x|_inf <= R.
    let radius_inf = 3.0;
    let m = 6.0 * weight * radius_inf;
    let a = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| -1.0 + 3.0 * i as f64 / (n - 1) as f64));
    let obj = Objective::new(Quartic::new(a, DVector::zeros(n), DVector::zeros(n), weight));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x0 = DVector::from_fn(n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let cfg = SolverConfig {
        mode: Mode::FixedRadius,
        model_method: ModelMethod::HvpExact,
        m_est: Some(m),
        tol_g: eps,
        max_iter: 50_000,
        ..SolverConfig::default()
    };
    let bound = 2.0 / (3.0 * m * m) * eps.powf(1.5);
    let mut prev_f = obj.value(&x0);
    let (mut checked, mut short, mut outside) = (0, 0, 0);
    let mut smallest = f64::INFINITY;
    let report = minimize_with(&obj, &x0, &cfg, |state, rec| {
        if state.x.amax() > radius_inf {
            outside += 1;
        }
        if rec.lambda_or_mu >= eps.sqrt() {
            checked += 1;
            let dec = prev_f - rec.f;
            smallest = smallest.min(dec);
            if dec < bound - 1e-12 {
                short += 1;
            }
        }
        prev_f = rec.f;
    })
    .unwrap();
    outcome(
        checked > 0 && short == 0 && outside == 0,
        format!(
            "{checked} steps with lambda >= sqrt(eps), min decrease {smallest:.3e} vs bound {bound:.3e}, {short} short, {outside} outside the Lipschitz box, status {}",
            report.status
        ),
    )
}

// 5. Corrector residual identity and termination.

fn criterion_corrector() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut worst, mut bad_stop, mut too_many) = (0.0f64, 0, 0);
    for i in 0..200 {
        let n = 3 + i % 18;
        let h = random_sym(&mut rng, n);
        let obj = Objective::new(DenseQuadratic::new(h.clone(), random_vec(&mut rng, n)));
        let x = random_vec(&mut rng, n);
        let gx = obj.gradient(&x);

        let mut space = Subspace::new();
        for _ in 0..(1 + i % (n - 1)) {
            space.expand(&random_vec(&mut rng, n));
        }
        let v = DMatrix::from_columns(&space.vectors);
        let d = &v * random_vec(&mut rng, space.dim());
        let p = &v * v.transpose();
        let dense = ((&h - &p * &h * &p) * &d).norm();
        let got = residual(&obj, &x, &gx, &space, &d).unwrap();
        worst = worst.max((got - dense).abs() / (1.0 + dense));

        let momentum = random_vec(&mut rng, n);
        let model = build_hvp(&obj, &x, &gx, &momentum, obj.value(&x), true).unwrap();
        let delta = 0.1 + 5.0 * rng.random::<f64>();
        let sol = solve_trs(&model.q, &model.c, &model.gram, delta).unwrap();
        let d_init = model.lift(&sol.alpha);
        let c = if i % 2 == 0 { 1e2 } else { 1e-6 };
        let params = CorrectorParams { radius: delta, eps: 1e-6, c, max_dim: n };
        let out = corrector_step(&obj, &x, &gx, &momentum, &d_init, sol.lambda, &params).unwrap();
        if out.expansions > n - 1 {
            too_many += 1;
        }
        if !(out.lambda > params.eps.sqrt() || out.residual <= c * out.step.norm_squared()) {
            bad_stop += 1;
        }
    }
    outcome(
        worst <= 1e-8 && bad_stop == 0 && too_many == 0,
        format!("max residual mismatch {worst:.2e}, {bad_stop} unmet stops, {too_many} over n-1 expansions"),
    )
}

// 6. L2-Lp: DRSOM against gradient descent.

fn gd_options(tol: f64, max_iter: usize) -> BaselineOptions {
    BaselineOptions::new(tol, max_iter, LineSearchSpec::wolfe(0.9))
}

fn rf_hvp(tol: f64, max_iter: usize) -> SolverConfig {
    SolverConfig { model_method: ModelMethod::HvpExact, tol_g: tol, max_iter, ..SolverConfig::default() }
}

fn criterion_lp() -> Outcome {
    let clock = Instant::now();
    let (mut ours, mut default_cfg, mut gd) = (Vec::new(), Vec::new(), Vec::new());
    let mut all_converged = true;
    for seed in 1..=5 {
        let inst = lp_generate(&LpParams { n: 300, m: 100, r: 0.15, p: 0.5, eps: 0.1, seed }).unwrap();
        let x0 = DVector::zeros(100);
        let run = |cfg: &SolverConfig| minimize(&Objective::new(inst.objective()), &x0, cfg).unwrap();
        let r = run(&rf_hvp(1e-5, 20_000));
        all_converged &= r.converged();
        ours.push(r.iterations as f64);
        let r = run(&SolverConfig { tol_g: 1e-5, max_iter: 20_000, ..SolverConfig::default() });
        default_cfg.push(r.iterations as f64);
        let r = gd_minimize(&Objective::new(inst.objective()), &x0, &gd_options(1e-5, 20_000)).unwrap();
        gd.push(r.iterations as f64);
    }
    let (m_ours, m_def, m_gd) = (median(&mut ours), median(&mut default_cfg), median(&mut gd));
    let secs = clock.elapsed().as_secs_f64();
    outcome(
        all_converged && m_ours <= 0.5 * m_gd && secs < 60.0,
        format!(
            "median iterations drsom {m_ours} vs gd {m_gd} (ratio {:.2}); default interpolation model {m_def} (ratio {:.2}); {secs:.1}s",
            m_ours / m_gd,
            m_def / m_gd
        ),
    )
}

// 7. Sensor network localization from the zero start.

fn criterion_snl() -> Outcome {
    let (mut converged, mut rmse_ours, mut rmse_gd) = (0, 0.0, 0.0);
    for seed in 1..=5 {
        let inst = snl_generate(&SnlParams { n: 80, m: 5, radio_range: 0.5, noise: 0.05, seed }).unwrap();
        let x0 = DVector::zeros(inst.dim());
        let r = minimize(&Objective::new(inst.objective()), &x0, &rf_hvp(1e-6, 5000)).unwrap();
        if r.converged() {
            converged += 1;
        }
        rmse_ours += inst.rmse(&r.x_final) / 5.0;
        let g = gd_minimize(&Objective::new(inst.objective()), &x0, &gd_options(1e-6, 5000)).unwrap();
        rmse_gd += inst.rmse(&g.x_final) / 5.0;
    }
    outcome(
        converged >= 4 && rmse_ours <= rmse_gd,
        format!("{converged}/5 converged, mean RMSE drsom {rmse_ours:.4} vs gd {rmse_gd:.4}"),
    )
}

// 8. Local convergence order on a strongly convex quartic.

fn criterion_local_rate() -> Outcome {
    let n = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rot = random_orthogonal(&mut rng, n);
    let diag = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 1.0 + i as f64));
    let a = &rot * diag * rot.transpose();
    let center = random_vec(&mut rng, n);
    let obj = Objective::new(Quartic::new(a, DVector::zeros(n), center.clone(), 1.0));
    let x0 = &center + random_vec(&mut rng, n) * 0.5;
    let cfg = SolverConfig {
        mode: Mode::TrustRadius,
        model_method: ModelMethod::HvpExact,
        corrector: CorrectorPolicy::Periodic { period: 1, c: 1e2, j_max: n },
        tol_g: 1e-12,
        max_iter: 500,
        ..SolverConfig::default()
    };
    let mut errors = vec![(&x0 - &center).norm()];
    minimize_with(&obj, &x0, &cfg, |state, rec| {
        if rec.accepted {
            errors.push((&state.x - &center).norm());
        }
    })
    .unwrap();
    // An iterate that lands exactly on the minimizer has no logarithm.
    let errors: Vec<f64> = errors.into_iter().filter(|e| *e > 0.0).collect();
    if errors.len() < 5 {
        return outcome(false, format!("only {} nonzero errors", errors.len()));
    }
    let tail = &errors[errors.len() - 5..];
    let pts: Vec<(f64, f64)> = tail.windows(2).map(|w| (w[0].ln(), w[1].ln())).collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / 4.0;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / 4.0;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    outcome(
        slope >= 1.8,
        format!("slope {slope:.2} over errors {:?}", tail.iter().map(|e| format!("{e:.1e}")).collect::<Vec<_>>()),
    )
}

// 9. Derivative checks on every built-in objective.

fn fd_check(obj: &Objective, points: &[DVector<f64>]) -> (f64, f64) {
    let (mut g_err, mut h_err) = (0.0f64, 0.0f64);
    for x in points {
        let n = x.len();
        let g = obj.gradient(x);
        let mut fd = DVector::zeros(n);
        for i in 0..n {
            let h = 1e-6 * (1.0 + x[i].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            fd[i] = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
        }
        g_err = g_err.max((&fd - &g).norm() / g.norm().max(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let v = random_vec(&mut rng, n).normalize();
        let hv = obj.problem().hessian_vector(x, &v).expect("built-ins have exact HVPs");
        let t = 1e-6 * (1.0 + x.norm());
        let fd_hv = (obj.gradient(&(x + &v * t)) - obj.gradient(&(x - &v * t))) / (2.0 * t);
        h_err = h_err.max((&fd_hv - &hv).norm() / hv.norm().max(1.0));
    }
    (g_err, h_err)
}

fn criterion_derivatives() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut problems: Vec<(String, Objective, Option<f64>)> = classic::classic_suite(10, 1e3, 3)
        .into_iter()
        .map(|p| (p.name, p.objective, None))
        .collect();
    let lp = lp_generate(&LpParams { n: 60, m: 30, r: 0.3, p: 0.5, eps: 0.1, seed: 3 }).unwrap();
    problems.push(("lp".into(), Objective::new(lp.objective()), Some(0.1)));
    let snl = snl_generate(&SnlParams { n: 20, m: 4, radio_range: 0.6, noise: 0.05, seed: 3 }).unwrap();
    problems.push(("snl".into(), Objective::new(snl.objective()), None));
    let mut failures = Vec::new();
    let (mut worst_g, mut worst_h) = (0.0f64, 0.0f64);
    for (name, obj, kink) in &problems {
        let mut points = Vec::new();
        while points.len() < 100 {
            let x = DVector::from_fn(obj.dim(), |_, _| 2.0 * rng.random::<f64>() - 1.0);
            if kink.is_some_and(|e| x.iter().any(|v| (v.abs() - e).abs() < 1e-3)) {
                continue;
            }
            points.push(x);
        }
        let (g, h) = fd_check(obj, &points);
        worst_g = worst_g.max(g);
        worst_h = worst_h.max(h);
        if g > 1e-5 || h > 1e-4 {
            failures.push(name.clone());
        }
    }
    let mut interp_gap = 0.0f64;
    for seed in 0..20 {
        let n = 4 + seed as usize % 8;
        let obj = Objective::new(DenseQuadratic::random_spd(n, 0.5, 5.0, seed));
        let x = random_vec(&mut rng, n);
        let g = obj.gradient(&x);
        let d = random_vec(&mut rng, n);
        let f = obj.value(&x);
        let hvp = build_hvp(&obj, &x, &g, &d, f, true).unwrap();
        let interp = build_interp(&obj, &x, &g, &d, f, 4, 1.0, &mut rng, None).unwrap();
        interp_gap = interp_gap.max((&interp.q - &hvp.q).norm() / (1.0 + hvp.q.norm()));
    }
    outcome(
        failures.is_empty() && interp_gap <= 1e-8,
        format!(
            "{} objectives, worst gradient error {worst_g:.1e}, worst HVP error {worst_h:.1e}, interpolation gap {interp_gap:.1e}{}",
            problems.len(),
            if failures.is_empty() { String::new() } else { format!(", failing: {}", failures.join(", ")) }
        ),
    )
}

// 10. Repeated `solve` invocations agree bit for bit.

fn criterion_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_drsom");
    let inst = dir.path().join("lp.json");
    let gen = std::process::Command::new(bin)
        .args(["gen", "lp", "--n", "120", "--m", "40", "--r", "0.2", "--seed", "10", "--out"])
        .arg(&inst)
        .output()
        .unwrap();
    if !gen.status.success() {
        return outcome(false, "instance generation failed".into());
    }
    let mut mismatches = Vec::new();
    let configs: [&[&str]; 4] = [&[], &["--model", "hvp", "--mode", "tr"], &["--corrector", "periodic"], &["--solver", "lbfgs"]];
    for (i, extra) in configs.iter().enumerate() {
        let mut outputs = Vec::new();
        for run in 0..2 {
            let trace = dir.path().join(format!("t{i}_{run}.csv"));
            let summary = dir.path().join(format!("s{i}_{run}.json"));
            std::process::Command::new(bin)
                .args(["solve", "--instance"])
                .arg(&inst)
                .args(*extra)
                .args(["--tol", "1e-6", "--seed", "3", "--trace"])
                .arg(&trace)
                .arg("--out")
                .arg(&summary)
                .output()
                .unwrap();
            let mut s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
            s.as_object_mut().unwrap().remove("wall_seconds");
            outputs.push((std::fs::read_to_string(&trace).unwrap(), s));
        }
        if outputs[0] != outputs[1] {
            mismatches.push(i);
        }
    }
    outcome(mismatches.is_empty(), format!("{} configurations, mismatches {:?}", configs.len(), mismatches))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("CG equivalence", criterion_cg),
        ("TRS oracle equivalence", criterion_trs),
        ("boundary decrease identity", criterion_boundary_identity),
        ("fixed-radius sufficient decrease", criterion_fixed_radius),
        ("corrector correctness", criterion_corrector),
        ("L2-Lp benchmark", criterion_lp),
        ("SNL benchmark", criterion_snl),
        ("local quadratic rate", criterion_local_rate),
        ("derivative verification", criterion_derivatives),
        ("determinism", criterion_determinism),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        let clock = Instant::now();
        let out = check();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let tag = match (out.pass, expected_fail) {
            (true, _) => "PASS",
            (false, true) => "FAIL (expected)",
            (false, false) => "FAIL",
        };
        println!("criterion {id:>2} {tag:<15} {name}: {} [{:.1}s]", out.detail, clock.elapsed().as_secs_f64());
        if !out.pass && !expected_fail {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria pass except the expected {EXPECTED_FAILURES:?}");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
