use besselstop::boundary::{closed_form_z, find_c_excursion, find_z};
use besselstop::oracles::ode::z_from_ode;
use besselstop::oracles::special::{normalized_h, root_quadratic_case};
use besselstop::series::{default_table, ModelParams};
use besselstop::value::{build_candidate, explicit_special_values, ExcursionSolution};

fn p(a: f64, n: f64) -> ModelParams<f64> {
    ModelParams::new(a, n).unwrap()
}

#[test]
fn excursion_three_ways() {
    let c = find_c_excursion(1e-12).unwrap().value;
    let z_series = find_z(p(3.0, 1.0), 1e-12).unwrap().value;
    let z_closed = closed_form_z(p(3.0, 1.0)).unwrap().unwrap();
    let z_ode = z_from_ode(p(3.0, 1.0)).unwrap();
    assert!((z_series - c * c).abs() < 1e-10);
    assert!((z_closed - c * c).abs() < 1e-9);
    assert!((z_ode - c * c).abs() < 1e-6);
}

#[test]
fn excursion_value_matches_general_candidate() {
    let ex = ExcursionSolution::<f64>::solve().unwrap();
    let cand = build_candidate(p(3.0, 1.0)).unwrap();
    for (t, x) in [(0.0, 0.0), (0.3, 0.5), (0.7, 0.4), (0.5, 2.0)] {
        let a = ex.value(t, x).unwrap();
        let b = cand.v_star(t, x).unwrap();
        assert!((a - b).abs() < 1e-8, "({t},{x}): {a} vs {b}");
    }
}

#[test]
fn quadratic_family_against_series() {
    for alpha in [4.0, 6.0, 7.0] {
        let params = p(alpha, 2.0);
        let t = default_table(params).unwrap();
        for y in [0.5, 1.0, 3.0] {
            let h = normalized_h(&params, y).unwrap();
            assert!((h - t.psi(y).unwrap()).abs() <= 1e-9 * h, "alpha={alpha} y={y}");
        }
        let z = find_z(params, 1e-12).unwrap().value;
        assert!((root_quadratic_case(alpha).unwrap() - z).abs() < 1e-9);
        let c = build_candidate(params).unwrap();
        let u = explicit_special_values(&params, 0.2, 1.0).unwrap().unwrap();
        assert!((u - c.u_star(0.2, 1.0).unwrap()).abs() < 1e-7);
    }
}
