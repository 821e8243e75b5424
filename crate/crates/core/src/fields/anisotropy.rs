//! The p-Laplacian, its linearisation and the anisotropy tensor
//! `A = I + (p-2) u (x) u / (|u|^2 + eps)`.
//!
//! Every occurrence of `|u|^{p-2}` is regularised as `(|u|^2 + eps)^{(p-2)/2}`
//! with the single `eps` carried in [`ModelParams`].

use super::calculus::{divergence, gradient, hessian};
use super::{ModelParams, ScalarField, TensorField, VectorField};

/// `(|u|^2 + eps)^{(p-2)/2}` per node.
pub fn regularized_speed(u: &VectorField, params: &ModelParams) -> ScalarField {
    let e = 0.5 * (params.p() - 2.0);
    let eps = params.eps();
    if e == 0.0 {
        return ScalarField::constant(*u.grid(), 1.0);
    }
    u.norm_sq().map(|s| (s + eps).powf(e))
}

/// Flux-form `div((|grad phi|^2 + eps)^{(p-2)/2} grad phi)`.
pub fn p_laplacian(phi: &ScalarField, params: &ModelParams) -> ScalarField {
    let u = gradient(phi);
    divergence(&u.scaled_by(&regularized_speed(&u, params)))
}

/// Returns `(A, a)` with `a = A^{-1}` from the rank-one (Sherman-Morrison) formula.
///
/// `p > 1` is guaranteed by [`ModelParams`], so `1 + (p-2)|u|^2/(|u|^2+eps)`
/// stays above `min(1, p-1)` and `a` is always defined.
pub fn anisotropy(u: &VectorField, params: &ModelParams) -> (TensorField, TensorField) {
    let g = *u.grid();
    let n = g.dim();
    let pm2 = params.p() - 2.0;
    let eps = params.eps();
    let mut big = vec![vec![0.0; g.len()]; n * n];
    let mut inv = vec![vec![0.0; g.len()]; n * n];
    for k in 0..g.len() {
        let v = u.at(k);
        let s2: f64 = v[..n].iter().map(|x| x * x).sum();
        let denom = s2 + eps;
        // direction is undefined when u = 0 and eps = 0; the outer product is dropped there
        let k_a = if denom > 0.0 { pm2 / denom } else { 0.0 };
        let k_inv = k_a / (1.0 + k_a * s2);
        for i in 0..n {
            for j in 0..n {
                let delta = if i == j { 1.0 } else { 0.0 };
                big[i * n + j][k] = delta + k_a * v[i] * v[j];
                inv[i * n + j][k] = delta - k_inv * v[i] * v[j];
            }
        }
    }
    (TensorField::from_raw(g, big), TensorField::from_raw(g, inv))
}

/// `|T|_A^2 = sum A^{ik} A^{jl} T_ij T_kl` per node.
pub fn a_norm2(t: &TensorField, a: &TensorField) -> ScalarField {
    let g = *t.grid();
    let n = g.dim();
    let vals = (0..g.len())
        .map(|k| {
            let tm = t.at(k);
            let am = a.at(k);
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    for r in 0..n {
                        for l in 0..n {
                            s += am[i][r] * am[j][l] * tm[i][j] * tm[r][l];
                        }
                    }
                }
            }
            s
        })
        .collect();
    ScalarField::from_raw(g, vals)
}

/// `<X, Y>_A = sum A^{ij} X_i Y_j` per node.
pub fn a_inner(x: &VectorField, y: &VectorField, a: &TensorField) -> ScalarField {
    let g = *x.grid();
    let n = g.dim();
    let vals = (0..g.len())
        .map(|k| {
            let (xv, yv, am) = (x.at(k), y.at(k), a.at(k));
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += am[i][j] * xv[i] * yv[j];
                }
            }
            s
        })
        .collect();
    ScalarField::from_raw(g, vals)
}

/// Pointwise matrix-vector product `M v`.
pub(crate) fn apply(m: &TensorField, v: &VectorField) -> VectorField {
    let g = *v.grid();
    let n = g.dim();
    let mut comps = vec![vec![0.0; g.len()]; n];
    for (i, out) in comps.iter_mut().enumerate() {
        for j in 0..n {
            let mij = m.entry(i, j);
            let vj = v.component(j);
            for k in 0..out.len() {
                out[k] += mij[k] * vj[k];
            }
        }
    }
    VectorField::from_raw(g, comps)
}

/// `L_eps psi = div((|u|^2 + eps)^{p/2-1} A_eps grad psi)` linearised about `u_base`.
pub fn linearized_p_laplacian(
    u_base: &VectorField,
    psi: &ScalarField,
    params: &ModelParams,
) -> ScalarField {
    let (a_big, _) = anisotropy(u_base, params);
    let w = regularized_speed(u_base, params);
    divergence(&apply(&a_big, &gradient(psi)).scaled_by(&w))
}

/// Pointwise residual of the flat p-Bochner identity
/// `L_eps F - p s^2 |hess phi|_A^2 - p s <grad phi, grad Delta_p phi>`
/// with `F = (|grad phi|^2 + eps)^{p/2}` and `s = (|grad phi|^2 + eps)^{(p-2)/2}`.
///
/// With this choice of `F` the identity holds exactly for every `eps`, so the
/// residual is pure truncation error.
pub fn bochner_residual(phi: &ScalarField, params: &ModelParams) -> ScalarField {
    let u = gradient(phi);
    let s = regularized_speed(&u, params);
    let eps = params.eps();
    let half_p = 0.5 * params.p();
    let big_f = u.norm_sq().map(|v| (v + eps).powf(half_p));
    let lhs = linearized_p_laplacian(&u, &big_f, params);
    let (a_big, _) = anisotropy(&u, params);
    let hess_term = a_norm2(&hessian(phi), &a_big);
    let transport = u.dot(&gradient(&p_laplacian(phi, params)));
    let p = params.p();
    let vals = (0..lhs.values().len())
        .map(|k| {
            let sk = s.values()[k];
            lhs.values()[k] - p * sk * sk * hess_term.values()[k] - p * sk * transport.values()[k]
        })
        .collect();
    ScalarField::from_raw(*phi.grid(), vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{hessian, GridSpec, Topology};
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn params(p: f64, eps: f64, dim: usize) -> ModelParams {
        ModelParams::new(p, f64::INFINITY, eps, dim).unwrap()
    }

    #[test]
    fn speed_examples() {
        let g = GridSpec::cube(2, 0.0, 1.0, 8, Topology::Periodic).unwrap();
        let u = VectorField::from_fn(g, |x, v| {
            v[0] = x[0] * 5.0;
            v[1] = -x[1];
        });
        let s = regularized_speed(&u, &params(2.0, 0.3, 2));
        assert!(s.values().iter().all(|&v| v == 1.0));

        let unit = VectorField::from_fn(g, |_, v| {
            v[0] = 1.0;
            v[1] = 0.0;
        });
        let s = regularized_speed(&unit, &params(3.0, 0.0, 2));
        assert!(s.values().iter().all(|&v| v == 1.0));

        let two = VectorField::from_fn(g, |_, v| {
            v[0] = 2.0;
            v[1] = 0.0;
        });
        let s = regularized_speed(&two, &params(3.0, 1e-8, 2));
        assert!(s.values().iter().all(|&v| (v - 2.0000000025).abs() < 1e-12));
    }

    #[test]
    fn p_laplacian_of_radial_quadratic() {
        // phi = |x|^2/2: Delta_p phi = (n + p - 2) |x|^{p-2}
        let g = GridSpec::cube(2, -2.0, 2.0, 64, Topology::Box).unwrap();
        let phi = ScalarField::from_fn(g, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let lap2 = p_laplacian(&phi, &params(2.0, 0.0, 2));
        assert!(lap2.values().iter().all(|v| (v - 2.0).abs() < 1e-9));

        let p = 3.0;
        let lap = p_laplacian(&phi, &params(p, 0.0, 2));
        for k in 0..g.len() {
            if g.boundary_distance(k) < 2 {
                continue;
            }
            let x = g.node_position(k);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            if r < 0.5 {
                continue;
            }
            let exact = (2.0 + p - 2.0) * r.powf(p - 2.0);
            assert!((lap.values()[k] - exact).abs() < 0.02, "r={r}");
        }
        let flat = p_laplacian(&ScalarField::constant(g, 1.0), &params(3.0, 1e-8, 2));
        assert_eq!(flat.max_abs(), 0.0);
    }

    #[test]
    fn anisotropy_examples() {
        let g = GridSpec::cube(2, 0.0, 1.0, 8, Topology::Periodic).unwrap();
        let u = VectorField::from_fn(g, |x, v| {
            v[0] = x[0] + 0.3;
            v[1] = x[1] - 0.2;
        });
        let (a_big, a_inv) = anisotropy(&u, &params(2.0, 1e-8, 2));
        assert_eq!(a_big, TensorField::identity(g));
        assert_eq!(a_inv, TensorField::identity(g));

        let e1 = VectorField::from_fn(g, |_, v| {
            v[0] = 1.0;
            v[1] = 0.0;
        });
        let (a_big, a_inv) = anisotropy(&e1, &params(3.0, 0.0, 2));
        let m = a_big.at(3);
        let mi = a_inv.at(3);
        assert_eq!(m, [[2.0, 0.0], [0.0, 1.0]]);
        assert!((mi[0][0] - 0.5).abs() < 1e-15 && mi[1][1] == 1.0 && mi[0][1] == 0.0);
    }

    #[test]
    fn a_norm_examples() {
        let g = GridSpec::cube(2, 0.0, 1.0, 8, Topology::Periodic).unwrap();
        let a = TensorField::uniform(g, &[2.0, 0.0, 0.0, 1.0]).unwrap();
        let t = TensorField::identity(g);
        assert!(a_norm2(&t, &a).values().iter().all(|&v| v == 5.0));
        let x = VectorField::from_fn(g, |_, v| {
            v[0] = 1.0;
            v[1] = 0.0;
        });
        assert!(a_inner(&x, &x, &a).values().iter().all(|&v| v == 2.0));

        let t = TensorField::uniform(g, &[1.0, 2.0, -3.0, 0.5]).unwrap();
        let id = TensorField::identity(g);
        assert!(a_norm2(&t, &id).values().iter().all(|&v| (v - 14.25).abs() < 1e-14));
    }

    #[test]
    fn linearized_operator_limits() {
        let g = GridSpec::periodic_1d(0.0, TAU, 128).unwrap();
        let psi = ScalarField::from_fn(g, |x| (2.0 * x[0]).sin());
        let u = gradient(&ScalarField::from_fn(g, |x| x[0].cos()));
        let lin = linearized_p_laplacian(&u, &psi, &params(2.0, 1e-8, 1));
        let lap = divergence(&gradient(&psi));
        assert!(lin.zip_map(&lap, |a, b| a - b).max_abs() < 1e-12);
        let zero = linearized_p_laplacian(&u, &ScalarField::constant(g, 4.0), &params(3.0, 1e-8, 1));
        assert_eq!(zero.max_abs(), 0.0);
    }

    #[test]
    fn linearization_along_base_is_scaled_p_laplacian() {
        // L(phi) = div(|u|^{p-2} A u) = (p-1) Delta_p phi for u = grad phi
        let g = GridSpec::box_1d(-1.0, 1.0, 128).unwrap();
        let phi = ScalarField::from_fn(g, |x| x[0] + 0.3 * (2.0 * x[0]).sin());
        let prm = params(3.0, 1e-8, 1);
        let u = gradient(&phi);
        let lin = linearized_p_laplacian(&u, &phi, &prm);
        let plap = p_laplacian(&phi, &prm);
        let e = lin.zip_map(&plap, |a, b| a - 2.0 * b).max_abs();
        assert!(e < 1e-6, "{e}");
    }

    /// Residual of `tr_A(|grad phi|^{p-2} hess phi) - Delta_p phi` away from critical points.
    fn trace_identity_residual(n: usize) -> f64 {
        let g = GridSpec::periodic_1d(0.0, TAU, n).unwrap();
        let prm = params(3.0, 1e-8, 1);
        let phi = ScalarField::from_fn(g, |x| x[0].sin());
        let u = gradient(&phi);
        let (a_big, _) = anisotropy(&u, &prm);
        let lhs = a_big
            .matmul(&hessian(&phi))
            .trace()
            .zip_map(&regularized_speed(&u, &prm), |t, s| t * s);
        let rhs = p_laplacian(&phi, &prm);
        (0..g.len())
            .filter(|&k| g.coord(0, k).cos().abs() > 0.2)
            .map(|k| (lhs.values()[k] - rhs.values()[k]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn trace_identity_converges_second_order() {
        let (e1, e2) = (trace_identity_residual(256), trace_identity_residual(512));
        assert!(e2 < 1e-3, "{e2}");
        let ratio = e1 / e2;
        assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
    }

    fn tensor_at_is_pd(a: &TensorField, k: usize, n: usize, floor: f64) -> bool {
        let m = a.at(k);
        if n == 1 {
            return m[0][0] >= floor;
        }
        let tr = m[0][0] + m[1][1];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let lam_min = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
        lam_min >= floor
    }

    proptest! {
        #[test]
        fn anisotropy_inverse_and_positivity(
            p in 1.05f64..6.0,
            eps in 1e-12f64..1e-2,
            u0 in -5.0f64..5.0,
            u1 in -5.0f64..5.0,
        ) {
            let g = GridSpec::cube(2, 0.0, 1.0, 8, Topology::Periodic).unwrap();
            let u = VectorField::from_fn(g, |x, v| { v[0] = u0 * (1.0 + x[0]); v[1] = u1 - x[1]; });
            let prm = params(p, eps, 2);
            let (a_big, a_inv) = anisotropy(&u, &prm);
            let prod = a_big.matmul(&a_inv);
            let id = TensorField::identity(g);
            let err = prod.sub_scaled(&ScalarField::constant(g, 1.0), &id).max_abs();
            prop_assert!(err <= 1e-10, "A a - I = {err}");
            for k in 0..g.len() {
                prop_assert!(tensor_at_is_pd(&a_big, k, 2, 1.0f64.min(p - 1.0) - 1e-9));
            }
        }
    }
}
