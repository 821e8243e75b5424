//! Second-order finite differences and midpoint quadrature.
//!
//! First derivatives use the centred stencil `(f[i+1] - f[i-1]) / 2h`; on a
//! torus it wraps, on a box the end nodes use `(-3 f0 + 4 f1 - f2) / 2h`.
//! Because the periodic centred stencil is antisymmetric, `divergence` is
//! exactly the negative adjoint of `gradient` under [`quadrature`].

use super::{GridSpec, ScalarField, TensorField, VectorField};
use crate::error::{Error, Result};

/// Centred first difference of `f` along `axis`.
pub(crate) fn diff_axis(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing(axis);
    let n = grid.points()[axis];
    let stride = grid.stride(axis);
    let inv2h = 0.5 / h;
    let mut out = vec![0.0; f.len()];
    for_each_line(grid, axis, |base| {
        let at = |i: usize| f[base + i * stride];
        for i in 1..n - 1 {
            out[base + i * stride] = (at(i + 1) - at(i - 1)) * inv2h;
        }
        if grid.is_periodic() {
            out[base] = (at(1) - at(n - 1)) * inv2h;
            out[base + (n - 1) * stride] = (at(0) - at(n - 2)) * inv2h;
        } else {
            out[base] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) * inv2h;
            out[base + (n - 1) * stride] = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) * inv2h;
        }
    });
    out
}

/// Compact three-point second difference along `axis`; one-sided four-point at box faces.
pub(crate) fn second_diff_axis(grid: &GridSpec, f: &[f64], axis: usize) -> Vec<f64> {
    let h = grid.spacing(axis);
    let n = grid.points()[axis];
    let stride = grid.stride(axis);
    let inv_h2 = 1.0 / (h * h);
    let mut out = vec![0.0; f.len()];
    for_each_line(grid, axis, |base| {
        let at = |i: usize| f[base + i * stride];
        for i in 1..n - 1 {
            out[base + i * stride] = (at(i + 1) - 2.0 * at(i) + at(i - 1)) * inv_h2;
        }
        if grid.is_periodic() {
            out[base] = (at(1) - 2.0 * at(0) + at(n - 1)) * inv_h2;
            out[base + (n - 1) * stride] = (at(0) - 2.0 * at(n - 1) + at(n - 2)) * inv_h2;
        } else {
            out[base] = (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) * inv_h2;
            out[base + (n - 1) * stride] =
                (2.0 * at(n - 1) - 5.0 * at(n - 2) + 4.0 * at(n - 3) - at(n - 4)) * inv_h2;
        }
    });
    out
}

/// Calls `f(base)` with the flat index of the first node of every grid line along `axis`.
fn for_each_line(grid: &GridSpec, axis: usize, mut f: impl FnMut(usize)) {
    match (grid.dim(), axis) {
        (1, _) => f(0),
        (_, 0) => (0..grid.points()[1]).for_each(f),
        _ => (0..grid.points()[0]).for_each(|i| f(i * grid.points()[1])),
    }
}

pub fn gradient(f: &ScalarField) -> VectorField {
    let g = *f.grid();
    let comps = (0..g.dim()).map(|a| diff_axis(&g, f.values(), a)).collect();
    VectorField::from_raw(g, comps)
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let g = *v.grid();
    let mut out = vec![0.0; g.len()];
    for a in 0..g.dim() {
        for (o, d) in out.iter_mut().zip(diff_axis(&g, v.component(a), a)) {
            *o += d;
        }
    }
    ScalarField::from_raw(g, out)
}

/// Compact second differences on the diagonal, nested centred differences off it.
/// The off-diagonal entry is computed once and stored in both slots.
pub fn hessian(f: &ScalarField) -> TensorField {
    let g = *f.grid();
    let n = g.dim();
    let mut comps = vec![Vec::new(); n * n];
    for a in 0..n {
        comps[a * n + a] = second_diff_axis(&g, f.values(), a);
    }
    if n == 2 {
        let dx = diff_axis(&g, f.values(), 0);
        let dxy = diff_axis(&g, &dx, 1);
        comps[1] = dxy.clone();
        comps[2] = dxy;
    }
    TensorField::from_raw(g, comps)
}

/// Scalar curl `d_1 u_2 - d_2 u_1` of a planar vector field.
pub fn curl2d(u: &VectorField) -> Result<ScalarField> {
    let g = *u.grid();
    if g.dim() != 2 {
        return Err(Error::ShapeMismatch(format!(
            "curl2d needs a 2D field, got dimension {}",
            g.dim()
        )));
    }
    let d1u2 = diff_axis(&g, u.component(1), 0);
    let d2u1 = diff_axis(&g, u.component(0), 1);
    Ok(ScalarField::from_raw(
        g,
        d1u2.iter().zip(&d2u1).map(|(a, b)| a - b).collect(),
    ))
}

/// Midpoint rule `sum_k f_k w_k h^n`.
pub fn quadrature(f: &ScalarField, weight: Option<&ScalarField>) -> f64 {
    let s: f64 = match weight {
        Some(w) => f.values().iter().zip(w.values()).map(|(a, b)| a * b).sum(),
        None => f.values().iter().sum(),
    };
    s * f.grid().cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Topology;
    use std::f64::consts::{PI, TAU};

    fn max_err(a: &[f64], b: impl Fn(usize) -> f64) -> f64 {
        a.iter().enumerate().fold(0.0, |m, (k, v)| m.max((v - b(k)).abs()))
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        for topo in [Topology::Periodic, Topology::Box] {
            let g = GridSpec::cube(2, -1.0, 1.0, 16, topo).unwrap();
            let du = gradient(&ScalarField::constant(g, 3.5));
            assert_eq!(du.max_norm(), 0.0);
        }
    }

    #[test]
    fn gradient_of_sine_is_second_order() {
        let err = |n: usize| {
            let g = GridSpec::periodic_1d(0.0, TAU, n).unwrap();
            let f = ScalarField::from_fn(g, |x| x[0].sin());
            let du = gradient(&f);
            max_err(du.component(0), |k| g.coord(0, k).cos())
        };
        let e256 = err(256);
        let h = TAU / 256.0;
        assert!(e256 <= h * h / 6.0 * 1.01, "err {e256}");
        let ratio = err(128) / e256;
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn gradient_of_linear_on_box_is_exact() {
        let g = GridSpec::box_1d(-2.0, 3.0, 20).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0]);
        let du = gradient(&f);
        assert!(max_err(du.component(0), |_| 1.0) < 1e-12);
    }

    #[test]
    fn divergence_of_gradient_sine() {
        let g = GridSpec::periodic_1d(0.0, TAU, 256).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin());
        let lap = divergence(&gradient(&f));
        let h = TAU / 256.0;
        // wide stencil: error ~ (2h)^2/6 * |f''''|
        assert!(max_err(lap.values(), |k| -g.coord(0, k).sin()) < 4.0 * h * h / 6.0 * 1.01);
        let c = VectorField::from_fn(g, |_, v| v[0] = 2.0);
        assert_eq!(divergence(&c).max_abs(), 0.0);
    }

    #[test]
    fn discrete_integration_by_parts() {
        let g = GridSpec::cube(2, 0.0, TAU, 64, Topology::Periodic).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] + 0.3).sin() * (2.0 * x[1]).cos() + 0.1 * x[1].sin());
        let v = VectorField::from_fn(g, |x, v| {
            v[0] = (x[0] * 3.0).cos() + x[1].sin();
            v[1] = (x[0] - x[1]).sin();
        });
        let lhs = quadrature(&f, Some(&divergence(&v)));
        let rhs = -quadrature(&gradient(&f).dot(&v), None);
        assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn hessian_of_quadratic_is_identity() {
        let g = GridSpec::cube(2, -2.0, 2.0, 24, Topology::Box).unwrap();
        let f = ScalarField::from_fn(g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let hess = hessian(&f);
        for k in 0..g.len() {
            let m = hess.at(k);
            assert!((m[0][0] - 1.0).abs() < 1e-10 && (m[1][1] - 1.0).abs() < 1e-10);
            assert!(m[0][1].abs() < 1e-10 && m[1][0] == m[0][1]);
        }
        assert_eq!(hessian(&ScalarField::constant(g, 2.0)).max_abs(), 0.0);
    }

    #[test]
    fn hessian_of_product_of_sines_is_second_order() {
        let err = |n: usize| {
            let g = GridSpec::cube(2, 0.0, TAU, n, Topology::Periodic).unwrap();
            let f = ScalarField::from_fn(g, |x| x[0].sin() * x[1].sin());
            let h = hessian(&f);
            let mut e: f64 = 0.0;
            for k in 0..g.len() {
                let x = g.node_position(k);
                let exact = [
                    [-x[0].sin() * x[1].sin(), x[0].cos() * x[1].cos()],
                    [x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()],
                ];
                let m = h.at(k);
                for i in 0..2 {
                    for j in 0..2 {
                        e = e.max((m[i][j] - exact[i][j]).abs());
                    }
                }
            }
            e
        };
        let (e64, e128) = (err(64), err(128));
        let h = TAU / 128.0;
        assert!(e128 < h * h, "{e128}");
        assert!((e64 / e128 - 4.0).abs() < 0.4);
    }

    #[test]
    fn curl_of_rotation_and_gradient() {
        let g = GridSpec::cube(2, -1.0, 1.0, 32, Topology::Box).unwrap();
        let rot = VectorField::from_fn(g, |x, v| {
            v[0] = -x[1];
            v[1] = x[0];
        });
        let c = curl2d(&rot).unwrap();
        assert!(c.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
        let tg = GridSpec::cube(2, 0.0, TAU, 32, Topology::Periodic).unwrap();
        let f = ScalarField::from_fn(tg, |x| (x[0] + 2.0 * x[1]).sin());
        assert!(curl2d(&gradient(&f)).unwrap().max_abs() < 1e-12);
        let one_d = GridSpec::periodic_1d(0.0, 1.0, 16).unwrap();
        assert!(curl2d(&VectorField::zeros(one_d)).is_err());
    }

    #[test]
    fn quadrature_is_exact_for_band_limited() {
        let g = GridSpec::periodic_1d(0.0, 1.0, 13).unwrap();
        assert!((quadrature(&ScalarField::constant(g, 1.0), None) - 1.0).abs() < 1e-15);
        let g = GridSpec::periodic_1d(0.0, TAU, 64).unwrap();
        let f = ScalarField::from_fn(g, |x| x[0].sin().powi(2));
        assert!((quadrature(&f, None) - PI).abs() < 1e-12);
    }
}
