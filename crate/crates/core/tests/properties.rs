use besselstop::boundary::find_z;
use besselstop::bridge_sim::pairwise_sum;
use besselstop::series::{closed_form_mismatch, default_table, ModelParams};
use besselstop::value::build_candidate;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = (f64, f64)> {
    (0.25f64..10.0, 0.25f64..10.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recursion_matches_gamma_form((a, n) in params()) {
        let t = default_table(ModelParams::new(a, n).unwrap()).unwrap();
        prop_assert!(closed_form_mismatch(&t) <= 1e-10);
    }

    #[test]
    fn coefficients_positive_and_psi_increasing((a, n) in params(), y in 0.0f64..4.0) {
        let t = default_table(ModelParams::new(a, n).unwrap()).unwrap();
        prop_assert!(t.coeffs().iter().all(|&c| c > 0.0));
        prop_assert!(t.psi(y).unwrap() >= 1.0);
        prop_assert!(t.psi_derivative(y, 1).unwrap() > 0.0);
    }

    #[test]
    fn root_is_a_sign_change((a, n) in params()) {
        let p = ModelParams::new(a, n).unwrap();
        let r = find_z(p, 1e-10).unwrap();
        prop_assert!(r.value >= p.proposition_bound());
        let t = besselstop::series::build_coefficients(p, 2.0 * r.value, 1e-14).unwrap();
        prop_assert!(t.f_eval(r.value * (1.0 - 1e-6)).unwrap() < 0.0);
        prop_assert!(t.f_eval(r.value * (1.0 + 1e-6)).unwrap() > 0.0);
    }

    #[test]
    fn candidate_dominates_payoff((a, n) in params(), t in 0.0f64..0.99, s in 0.0f64..2.0) {
        let c = build_candidate(ModelParams::new(a, n).unwrap()).unwrap();
        let q = s * c.z() * (1.0 - t);
        let u = c.u_star(t, q).unwrap();
        prop_assert!(u >= q.powf(n / 2.0) * (1.0 - 1e-12));
    }

    #[test]
    fn pairwise_sum_close_to_naive(xs in proptest::collection::vec(-1e3f64..1e3, 0..500)) {
        let naive: f64 = xs.iter().sum();
        let scale: f64 = xs.iter().map(|x| x.abs()).sum::<f64>().max(1.0);
        prop_assert!((pairwise_sum(&xs) - naive).abs() <= 1e-12 * scale);
    }
}
