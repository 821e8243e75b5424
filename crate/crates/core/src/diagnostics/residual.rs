//! Residuals of the flow equations evaluated on the exact self-similar solutions.
//!
//! The exact time derivatives come from the scale law; the spatial terms are
//! the solver's own right-hand sides applied to the sampled `(rho, phi)` with
//! `u` replaced by the discrete gradient of `phi`. Norms are taken over a fixed region that
//! excludes a ball around the origin (where `|x|^q` is not smooth for `q < 2`),
//! a margin of box-face nodes, and the far tail where the density is negligible.

use crate::closedform::{special_time_derivatives, ScaleMode, ScaleTrajectory};
use crate::error::{Error, Result};
use super::defect_density;
use crate::fields::{gradient, GridSpec, ModelParams, ScalarField};
use crate::flows::{rhs, special_state, Regime};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualRegion {
    pub exclusion_radius: f64,
    /// Nodes within this many of a box face are skipped.
    pub margin: usize,
    /// Nodes where `rho < density_floor * max rho` are skipped.
    pub density_floor: f64,
}

impl Default for ResidualRegion {
    fn default() -> Self {
        Self { exclusion_radius: 1.5, margin: 4, density_floor: 1e-6 }
    }
}

/// Max-norm residuals over the region. `potential` and `velocity` are NaN for
/// the p-heat family, whose potential is slaved to the density.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualNorms {
    /// `rho_t + div(rho v)` in density form.
    pub continuity: f64,
    pub potential: f64,
    pub velocity: f64,
}

impl ResidualNorms {
    pub fn components(&self) -> [(&'static str, f64); 3] {
        [
            ("continuity", self.continuity),
            ("potential", self.potential),
            ("velocity", self.velocity),
        ]
    }
}

impl ResidualRegion {
    /// Nodes that take part in the norms.
    pub fn mask(&self, grid: &GridSpec, rho: &ScalarField) -> Vec<bool> {
        let rho_max = rho.max_abs();
        (0..grid.len())
            .map(|k| {
                let x = grid.node_position(k);
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                r >= self.exclusion_radius
                    && grid.boundary_distance(k) >= self.margin
                    && rho.values()[k] >= self.density_floor * rho_max
            })
            .collect()
    }
}

fn regime_of(mode: ScaleMode) -> Regime {
    match mode {
        ScaleMode::Geodesic => Regime::Geodesic,
        ScaleMode::Pheat => Regime::Pheat,
        ScaleMode::Finite(_) => Regime::Langevin,
    }
}

/// Residuals of the family selected by the scale trajectory at time `t`.
pub fn special_residuals(
    params: &ModelParams,
    grid: &GridSpec,
    traj: &ScaleTrajectory,
    t: f64,
    region: &ResidualRegion,
) -> Result<ResidualNorms> {
    let regime = regime_of(traj.mode());
    regime.check_coupling(params.c())?;
    if traj.p() != params.p() {
        return Err(Error::InvalidParams("scale trajectory and model use different p".into()));
    }
    let scale = traj.state_at(t)?;
    let rates = traj.rates(&scale);
    let mut state = special_state(regime, params, grid, &scale)?;
    state.u = gradient(&state.phi);
    let rate = rhs(&state, params)?;
    let (dlr, du, dphi) = special_time_derivatives(params.dim(), params.p(), &scale, &rates, grid)?;

    let rho = state.rho();
    let inside = region.mask(grid, &rho);
    let mut out = ResidualNorms { continuity: 0.0, potential: 0.0, velocity: 0.0 };
    if regime == Regime::Pheat {
        out.potential = f64::NAN;
        out.velocity = f64::NAN;
    }
    for k in (0..grid.len()).filter(|&k| inside[k]) {
        let r = rho.values()[k];
        out.continuity = out.continuity.max((r * (dlr.values()[k] - rate.logrho.values()[k])).abs());
        if regime != Regime::Pheat {
            out.potential = out.potential.max((dphi.values()[k] - rate.phi.values()[k]).abs());
            for a in 0..grid.dim() {
                out.velocity = out.velocity.max((du.component(a)[k] - rate.u.component(a)[k]).abs());
            }
        }
    }
    Ok(out)
}

/// Max over the region of the Hessian-defect integrand
/// `|s hess phi - alpha a|_A^2 rho` of the exact family at time `t`, with
/// `alpha` from the scale law (`1/t` on the geodesic).
pub fn special_defect(
    params: &ModelParams,
    grid: &GridSpec,
    traj: &ScaleTrajectory,
    t: f64,
    region: &ResidualRegion,
) -> Result<f64> {
    let regime = regime_of(traj.mode());
    regime.check_coupling(params.c())?;
    let scale = traj.state_at(t)?;
    let state = special_state(regime, params, grid, &scale)?;
    let d = defect_density(&state, params, scale.alpha);
    let inside = region.mask(grid, &state.rho());
    Ok(d.values().iter().zip(&inside).filter(|(_, &m)| m).fold(0.0f64, |m, (v, _)| m.max(v.abs())))
}
