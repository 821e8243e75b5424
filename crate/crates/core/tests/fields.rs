use std::f64::consts::PI;

use proptest::prelude::*;
use wqflow::fields::{
    a_norm2, anisotropy, bochner_residual, divergence, gradient, hessian, p_laplacian, quadrature,
    regularized_speed, snapshot, GridSpec, ModelParams, ScalarField, Topology, VectorField,
};

fn torus(dim: usize, n: usize) -> GridSpec {
    GridSpec::cube(dim, -PI, PI, n, Topology::Periodic).unwrap()
}

fn trig(grid: GridSpec, a: [f64; 4]) -> ScalarField {
    ScalarField::from_fn(grid, move |x| {
        let y = x.get(1).copied().unwrap_or(0.0);
        a[0] * x[0].sin() + a[1] * (2.0 * x[0]).cos() + a[2] * (x[0] + y).sin() + a[3] * y.cos()
    })
}

fn amp() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn divergence_integrates_to_zero_on_torus(a in amp(), dim in 1usize..=2) {
        let g = torus(dim, 32);
        let f = trig(g, a);
        let v = gradient(&f).scaled_by(&f.map(|x| 1.0 + x * x));
        prop_assert!(quadrature(&divergence(&v), None).abs() < 1e-11);
    }

    #[test]
    fn summation_by_parts_on_torus(a in amp(), b in amp(), dim in 1usize..=2) {
        let g = torus(dim, 32);
        let f = trig(g, a);
        let v = gradient(&trig(g, b)).scaled_by(&f.map(f64::cos));
        let lhs = quadrature(&f.zip_map(&divergence(&v), |x, y| x * y), None);
        let rhs = quadrature(&gradient(&f).dot(&v), None);
        prop_assert!((lhs + rhs).abs() < 1e-12);
    }

    #[test]
    fn p2_laplacian_is_div_grad(a in amp(), dim in 1usize..=2) {
        let g = torus(dim, 24);
        let f = trig(g, a);
        let params = ModelParams::new(2.0, 1.0, 1e-8, dim).unwrap();
        let l = p_laplacian(&f, &params);
        let d = divergence(&gradient(&f));
        let diff = l.zip_map(&d, |x, y| (x - y).abs()).max_abs();
        prop_assert!(diff < 1e-12);
    }

    #[test]
    fn anisotropy_inverse(u in prop::collection::vec(-3.0f64..3.0, 2), p in 1.1f64..5.0) {
        let g = GridSpec::cube(2, 0.0, 1.0, 8, Topology::Box).unwrap();
        let field = VectorField::from_fn(g, |_, out| out.copy_from_slice(&u));
        let params = ModelParams::new(p, f64::INFINITY, 1e-8, 2).unwrap();
        let (big, small) = anisotropy(&field, &params);
        let m = big.matmul(&small);
        for k in 0..g.len() {
            let e = m.at(k);
            prop_assert!((e[0][0] - 1.0).abs() < 1e-10 && (e[1][1] - 1.0).abs() < 1e-10);
            prop_assert!(e[0][1].abs() < 1e-10 && e[1][0].abs() < 1e-10);
            // smallest eigenvalue of the symmetric 2x2 matrix
            let b = big.at(k);
            let (tr, det) = (b[0][0] + b[1][1], b[0][0] * b[1][1] - b[0][1] * b[1][0]);
            let lam = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
            prop_assert!(lam >= 1.0f64.min(p - 1.0) - 1e-6);
        }
    }

    #[test]
    fn a_norm_nonnegative(a in amp(), p in 1.1f64..5.0) {
        let g = torus(2, 16);
        let f = trig(g, a);
        let params = ModelParams::new(p, 1.0, 1e-8, 2).unwrap();
        let (big, _) = anisotropy(&gradient(&f), &params);
        let n = a_norm2(&hessian(&f), &big);
        prop_assert!(n.values().iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn speed_bounds(a in amp(), p in 1.1f64..5.0) {
        let g = torus(1, 32);
        let u = gradient(&trig(g, a));
        let params = ModelParams::new(p, 1.0, 1e-8, 1).unwrap();
        let s = regularized_speed(&u, &params);
        for (k, &v) in s.values().iter().enumerate() {
            let exact = (u.component(0)[k].powi(2) + 1e-8).powf(0.5 * (p - 2.0));
            prop_assert!((v - exact).abs() <= 1e-12 * exact.max(1.0));
        }
    }

    #[test]
    fn snapshot_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 80), periodic in any::<bool>()) {
        let topo = if periodic { Topology::Periodic } else { Topology::Box };
        let g = GridSpec::new(&[-1.0, 0.5], &[2.0, 3.25], &[8, 10], topo).unwrap();
        let f = ScalarField::from_vec(g, vals).unwrap();
        let mut buf = Vec::new();
        snapshot::write_field(&mut buf, &f).unwrap();
        let back = snapshot::read_field(buf.as_slice()).unwrap();
        prop_assert_eq!(back, f);
    }
}

fn sin_gradient_error(n: usize) -> f64 {
    let g = torus(1, n);
    let d = gradient(&ScalarField::from_fn(g, |x| x[0].sin()));
    (0..g.len()).map(|i| (d.component(0)[i] - g.coord(0, i).cos()).abs()).fold(0.0, f64::max)
}

#[test]
fn gradient_second_order() {
    let ratio = sin_gradient_error(64) / sin_gradient_error(128);
    assert!((3.9..4.1).contains(&ratio), "{ratio}");
}

#[test]
fn quadrature_exact_for_trig() {
    let g = torus(2, 16);
    let f = ScalarField::from_fn(g, |x| 1.0 + x[0].cos() * x[1].sin());
    assert!((quadrature(&f, None) - 4.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn p_laplacian_of_cubic_profile() {
    // phi = x^2/2 with p = 3 gives div(|x| x) = 2|x|
    let g = GridSpec::box_1d(0.5, 2.0, 200).unwrap();
    let params = ModelParams::new(3.0, 1.0, 0.0, 1).unwrap();
    let l = p_laplacian(&ScalarField::from_fn(g, |x| 0.5 * x[0] * x[0]), &params);
    let err = (2..g.len() - 2).map(|i| (l.values()[i] - 2.0 * g.coord(0, i)).abs()).fold(0.0, f64::max);
    assert!(err < 1e-3, "{err}");
}

#[test]
fn bochner_residual_vanishes_for_p2_quadratic() {
    let g = GridSpec::cube(2, -1.0, 1.0, 24, Topology::Box).unwrap();
    let params = ModelParams::new(2.0, 1.0, 1e-8, 2).unwrap();
    let r = bochner_residual(&ScalarField::from_fn(g, |x| x[0] * x[0] + 0.5 * x[0] * x[1]), &params);
    let inner = (0..g.len()).filter(|&k| g.boundary_distance(k) >= 3);
    let err = inner.map(|k| r.values()[k].abs()).fold(0.0, f64::max);
    assert!(err < 1e-9, "{err}");
}

#[test]
fn grid_rejects_bad_input() {
    assert!(GridSpec::box_1d(1.0, 0.0, 64).is_err());
    assert!(GridSpec::periodic_1d(0.0, 1.0, 2).is_err());
    assert!(ModelParams::new(1.0, 1.0, 1e-8, 1).is_err());
    assert!(ModelParams::new(2.0, -1.0, 1e-8, 1).is_err());
    assert!(ModelParams::new(2.0, 1.0, 1e-8, 3).is_err());
}
