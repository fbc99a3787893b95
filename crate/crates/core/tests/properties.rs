use ::drsom::corrector::{residual, Subspace};
use ::drsom::problems::{DenseQuadratic, Quartic};
use ::drsom::trs::{gram_norm, kkt_report, model_value, solve_regularized, solve_trs};
use ::drsom::{minimize, Mode, ModelMethod, Objective, SolverConfig};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn vec_of(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, len)
}

fn sym2(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[v[0], v[1], v[1], v[2]])
}

/// `L L^T` with a lower-triangular `L` whose diagonal is bounded away from 0.
fn gram2(v: &[f64]) -> DMatrix<f64> {
    let l = DMatrix::from_row_slice(2, 2, &[0.3 + v[0].abs(), 0.0, v[1], 0.3 + v[2].abs()]);
    &l * l.transpose()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn trs_solution_satisfies_kkt(q in vec_of(3), c in vec_of(2), g in vec_of(3), delta in 0.05f64..5.0) {
        let (q, c, g) = (sym2(&q), DVector::from_vec(c), gram2(&g));
        let sol = solve_trs(&q, &c, &g, delta).unwrap();
        let kkt = kkt_report(&q, &c, &g, delta, &sol);
        prop_assert!(kkt.holds(c.norm(), delta), "{kkt:?}");
        prop_assert!(sol.model_decrease >= -1e-12);
    }

    #[test]
    fn boundary_decrease_splits_into_two_nonnegative_terms(
        q in vec_of(3), c in vec_of(2), g in vec_of(3), delta in 0.05f64..5.0,
    ) {
        let (q, c, g) = (sym2(&q), DVector::from_vec(c), gram2(&g));
        let sol = solve_trs(&q, &c, &g, delta).unwrap();
        prop_assume!(sol.lambda > 0.0);
        let a = &sol.alpha;
        let radius_term = 0.5 * sol.lambda * delta * delta;
        let curvature_term = 0.5 * a.dot(&((&q + &g * sol.lambda) * a));
        let decrease = -model_value(&q, &c, a);
        prop_assert!(curvature_term >= -1e-10 * (1.0 + decrease));
        prop_assert!((decrease - radius_term - curvature_term).abs() <= 1e-8 * (1.0 + decrease));
        prop_assert!(decrease >= radius_term - 1e-8 * (1.0 + decrease));
    }

    #[test]
    fn regularized_step_solves_the_shifted_system(q in vec_of(3), c in vec_of(2), g in vec_of(3), extra in 0.1f64..5.0) {
        let (q, c, g) = (sym2(&q), DVector::from_vec(c), gram2(&g));
        // Shift past the most negative generalized eigenvalue.
        let eigs = ::drsom::trs::subspace_eigs(&q, &g).unwrap();
        let mu = 0.5 * (extra + (-eigs[0]).max(0.0));
        let a = solve_regularized(&q, &c, &g, mu).unwrap();
        let r = (&q + &g * (2.0 * mu)) * &a + &c;
        prop_assert!(r.norm() <= 1e-8 * (1.0 + c.norm()) * (1.0 + a.norm()));
    }

    #[test]
    fn subspace_stays_orthonormal(seed_vectors in prop::collection::vec(vec_of(8), 1..12)) {
        let mut s = Subspace::new();
        for v in &seed_vectors {
            s.expand(&DVector::from_vec(v.clone()));
        }
        prop_assert!(s.dim() <= 8);
        for (i, a) in s.vectors.iter().enumerate() {
            for (j, b) in s.vectors.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((a.dot(b) - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn residual_shrinks_as_the_subspace_grows(h in vec_of(36), first in vec_of(6), extra in prop::collection::vec(vec_of(6), 1..6)) {
        let m = DMatrix::from_row_slice(6, 6, &h);
        let obj = Objective::new(DenseQuadratic::new((&m + m.transpose()) * 0.5, DVector::zeros(6)));
        let x = DVector::zeros(6);
        let g = obj.gradient(&x);
        let d = DVector::from_vec(first);
        prop_assume!(d.norm() > 1e-3);
        let mut s = Subspace::new();
        s.expand(&d);
        let mut last = residual(&obj, &x, &g, &s, &d).unwrap();
        for w in extra {
            s.expand(&DVector::from_vec(w));
            let now = residual(&obj, &x, &g, &s, &d).unwrap();
            prop_assert!(now <= last * (1.0 + 1e-12) + 1e-12);
            last = now;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accepted_values_never_increase(seed in 0u64..500, mode in 0usize..2, interp in any::<bool>()) {
        let obj = Objective::new(Quartic::random_nonconvex(6, seed));
        let x0 = DVector::from_element(6, 0.5);
        let cfg = SolverConfig {
            mode: [Mode::RadiusFree, Mode::TrustRadius][mode],
            model_method: if interp { ModelMethod::default() } else { ModelMethod::HvpExact },
            max_iter: 300,
            seed,
            ..SolverConfig::default()
        };
        let r = minimize(&obj, &x0, &cfg).unwrap();
        let mut f = obj.value(&x0);
        for rec in r.trace.iter().filter(|t| t.accepted) {
            prop_assert!(rec.f <= f);
            f = rec.f;
        }
        prop_assert_eq!(r.f_final, f);
    }

    #[test]
    fn trust_radius_steps_respect_the_radius(seed in 0u64..500) {
        let obj = Objective::new(Quartic::random_nonconvex(5, seed));
        let x0 = DVector::from_element(5, 1.0);
        let cfg = SolverConfig { model_method: ModelMethod::HvpExact, max_iter: 200, ..SolverConfig::trust_radius() };
        let r = minimize(&obj, &x0, &cfg).unwrap();
        for rec in &r.trace {
            if rec.step_norm > 0.0 {
                prop_assert!(rec.step_norm <= rec.delta * (1.0 + 1e-8), "{} > {}", rec.step_norm, rec.delta);
            }
        }
    }
}

#[test]
fn gram_norm_matches_definition() {
    let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
    let a = DVector::from_vec(vec![1.0, -2.0]);
    assert!((gram_norm(&g, &a) - (2.0 - 2.0 + 4.0f64).sqrt()).abs() < 1e-15);
}
