//! Right-hand sides of the three regimes in the variables `(log rho, u, phi)`.
//!
//! The velocity equation is written in Lamb form
//! `u_t = -grad H(u) - omega J v - damping`, with `H = (|u|^2+eps)^{p/2}/p`,
//! `v = dH/du`, `omega = curl u` and `J v = (-v_2, v_1)`. For smooth fields this
//! equals `-(v . grad) u`, and on the grid it makes `u - grad(phi)` evolve only
//! through the curl and the damping.

use super::{FlowRate, FlowState, Regime};
use crate::error::{Error, Result};
use crate::fields::calculus::diff_axis;
use crate::fields::{curl2d, divergence, gradient, regularized_speed, ModelParams, ScalarField, VectorField};

/// Sign of the relaxation term in the potential equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `c^p (phi_t + |grad phi|^p / p) = -phi - log rho - 1`.
    Forward,
    /// `c^p (phi_t + |grad phi|^p / p) = -phi + log rho + 1`.
    Backward,
}

/// `H(u) = (|u|^2 + eps)^{p/2} / p` per node.
pub fn hamiltonian_density(u: &VectorField, params: &ModelParams) -> ScalarField {
    let p = params.p();
    let eps = params.eps();
    u.norm_sq().map(|s| (s + eps).powf(0.5 * p) / p)
}

/// `-div(rho v) / rho` with `v = speed(u) u`.
fn continuity(logrho: &ScalarField, u: &VectorField, params: &ModelParams) -> (ScalarField, VectorField) {
    let rho = logrho.map(f64::exp);
    let v = u.scaled_by(&regularized_speed(u, params));
    let div = divergence(&v.scaled_by(&rho));
    let rate = div.zip_map(&rho, |d, r| -d / r);
    (rate, v)
}

/// Transport part shared by the geodesic and Langevin regimes.
fn inviscid(state: &FlowState, params: &ModelParams) -> FlowRate {
    let grid = *state.logrho.grid();
    let (dlogrho, v) = continuity(&state.logrho, &state.u, params);
    let h = hamiltonian_density(&state.u, params);
    let mut du: Vec<Vec<f64>> = gradient(&h)
        .components()
        .iter()
        .map(|c| c.iter().map(|x| -x).collect())
        .collect();
    if grid.dim() == 2 {
        let omega = curl2d(&state.u).expect("two-dimensional grid");
        let (v1, v2) = (v.component(0), v.component(1));
        for (k, w) in omega.values().iter().enumerate() {
            du[0][k] += w * v2[k];
            du[1][k] -= w * v1[k];
        }
    }
    FlowRate {
        logrho: dlogrho,
        u: VectorField::from_raw(grid, du),
        phi: h.map(|x| -x),
    }
}

/// `L^q`-geodesic flow: `rho_t + div(rho v) = 0`, `phi_t + H(grad phi) = 0`.
pub fn geodesic_rhs(state: &FlowState, params: &ModelParams) -> FlowRate {
    inviscid(state, params)
}

/// Langevin deformation with coupling `c` in `(0, inf)`.
pub fn langevin_rhs(state: &FlowState, params: &ModelParams, direction: Direction) -> Result<FlowRate> {
    let c = params.c();
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParams(format!("Langevin flow needs 0 < c < inf, got {c}")));
    }
    let k = params.inv_c_pow_p();
    let mut rate = inviscid(state, params);
    let sign = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let grid = *state.logrho.grid();
    for (r, (phi, lr)) in rate
        .phi
        .values_mut()
        .iter_mut()
        .zip(state.phi.values().iter().zip(state.logrho.values()))
    {
        *r -= k * (phi + sign * (lr + 1.0));
    }
    for a in 0..grid.dim() {
        let dlr = diff_axis(&grid, state.logrho.values(), a);
        let ua = state.u.component(a);
        for (i, r) in rate.u.components_mut()[a].iter_mut().enumerate() {
            *r -= k * (ua[i] + sign * dlr[i]);
        }
    }
    Ok(rate)
}

/// p-Laplacian heat flow `rho_t = div(rho |grad log rho|^{p-2} grad log rho)`.
///
/// `phi = -log rho - 1` and `u = grad phi` are slaved, so their rates follow
/// from the density rate by the same linear maps.
pub fn pheat_rhs(state: &FlowState, params: &ModelParams) -> FlowRate {
    let u = gradient(&state.logrho.map(|x| -x - 1.0));
    let (dlogrho, _) = continuity(&state.logrho, &u, params);
    let dphi = dlogrho.map(|x| -x);
    FlowRate {
        logrho: dlogrho,
        u: gradient(&dphi),
        phi: dphi,
    }
}

/// Right-hand side for the regime carried by `state`.
pub fn rhs(state: &FlowState, params: &ModelParams) -> Result<FlowRate> {
    match state.regime {
        Regime::Geodesic => Ok(geodesic_rhs(state, params)),
        Regime::Langevin => langevin_rhs(state, params, Direction::Forward),
        Regime::LangevinBackward => langevin_rhs(state, params, Direction::Backward),
        Regime::Pheat => Ok(pheat_rhs(state, params)),
    }
}
