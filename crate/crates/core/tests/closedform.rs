use proptest::prelude::*;
use wqflow::closedform::{
    c_np, eta_weight, profile_entropy, profile_rate, solve_scale_ode, special_langevin, ScaleMode,
    SpecialSolutionParams,
};
use wqflow::fields::quadrature;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn profile_has_unit_mass(p in 1.3f64..4.0, n in 1usize..=2) {
        let traj = solve_scale_ode(f64::INFINITY, p, 1.0, 1.0, 1.0, 1.1, 1e-3).unwrap();
        let s = traj.states()[0];
        let points = if n == 1 { 2048 } else { 256 };
        let grid = SpecialSolutionParams::new(n, p, f64::INFINITY, s.w).unwrap().grid(points).unwrap();
        let rho = special_langevin(n, p, &s, &grid).unwrap().logrho.map(f64::exp);
        prop_assert!((quadrature(&rho, None) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn entropy_derivative_in_w(p in 1.3f64..4.0, n in 1usize..=2, w in 0.5f64..3.0) {
        let h = 1e-5;
        let d = (profile_entropy(n, p, w + h).unwrap() - profile_entropy(n, p, w - h).unwrap()) / (2.0 * h);
        prop_assert!((d + n as f64 / w).abs() < 1e-6);
    }

    #[test]
    fn scale_ode_residuals(c in 0.3f64..3.0, p in 1.5f64..4.0) {
        let traj = solve_scale_ode(c, p, 1.0, 1.0, 1.0, 1.5, 1e-4).unwrap().with_beta(1, 0.0).unwrap();
        for r in traj.residuals() {
            prop_assert!(r.pode.abs() <= 1e-8 && r.alphaeq.abs() <= 1e-8 && r.eta.abs() <= 1e-8);
        }
        prop_assert!(traj.states().windows(2).all(|s| s[1].w > s[0].w));
    }
}

#[test]
fn gaussian_constant() {
    // p = 2: rho = exp(-x^2/4) / sqrt(4 pi)
    let c = c_np(1, 2.0).unwrap();
    assert!((c - 1.0 / (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
    assert!((profile_rate(2.0) - 0.25).abs() < 1e-15);
    let c2 = c_np(2, 2.0).unwrap();
    assert!((c2 - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-14);
}

#[test]
fn modes_from_coupling() {
    assert_eq!(ScaleMode::from_c(0.0).unwrap(), ScaleMode::Pheat);
    assert_eq!(ScaleMode::from_c(f64::INFINITY).unwrap(), ScaleMode::Geodesic);
    assert_eq!(ScaleMode::from_c(2.0).unwrap(), ScaleMode::Finite(2.0));
    assert!(ScaleMode::from_c(-1.0).is_err());
    assert!(ScaleMode::from_c(f64::NAN).is_err());
}

#[test]
fn geodesic_and_heat_modes_are_exact() {
    let geo = solve_scale_ode(f64::INFINITY, 3.0, 1.0, 1.0, 1.0, 2.0, 1e-3).unwrap();
    for s in geo.states() {
        assert_eq!(s.w, s.t);
        assert_eq!(s.alpha, 1.0 / s.t);
        assert_eq!(s.eta, s.t);
    }
    let heat = solve_scale_ode(0.0, 2.0, 1.0, 0.5, 1.0, 2.0, 1e-3).unwrap();
    for s in heat.states() {
        assert!((s.w - s.t.sqrt()).abs() < 1e-15);
    }
}

#[test]
fn eta_weight_limits() {
    let geo = solve_scale_ode(f64::INFINITY, 2.0, 1.0, 1.0, 1.0, 2.0, 1e-4).unwrap();
    assert!((eta_weight(&geo, 1.0, 1.7).unwrap() - 1.7).abs() < 1e-12);
    let tr = solve_scale_ode(1.0, 2.0, 1.0, 1.0, 1.0, 2.0, 1e-4).unwrap();
    assert!(eta_weight(&tr, 1.5, 1.5).unwrap().abs() < 1e-14);
    assert!(eta_weight(&tr, 1.5, 1.2).is_err());
    assert!(eta_weight(&tr, 1.0, 1.23456).is_err());
}

#[test]
fn rejects_degenerate_input() {
    assert!(c_np(1, 1.0).is_err());
    assert!(c_np(0, 2.0).is_err());
    assert!(solve_scale_ode(1.0, 2.0, -1.0, 1.0, 1.0, 2.0, 1e-3).is_err());
    assert!(solve_scale_ode(1.0, 2.0, 1.0, 1.0, 2.0, 1.0, 1e-3).is_err());
}
