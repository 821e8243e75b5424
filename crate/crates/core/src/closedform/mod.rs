//! Exact self-similar solutions on `R^n` and the normalising constant
//! `c_{n,p}`; these serve as oracles for the solver and the diagnostics.
//!
//! All three families share the profile
//! `rho = c_{n,p} w^{-n} exp(-((p-1)/p^q) |x|^q / w^q)` and differ only in the
//! scale `w(t)`: `w = t` for the geodesic flow, `w = t^{1/p}` for the p-heat
//! flow and the solution of the scale ODE for the Langevin deformation.

mod scale;

pub use scale::{
    eta_weight, solve_beta_ode, solve_scale_ode, ScaleMode, ScaleRates, ScaleResiduals, ScaleState,
    ScaleTrajectory,
};

use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::fields::{GridSpec, ScalarField, VectorField};

/// Tail mass allowed outside a truncated box.
pub const TAIL_TOLERANCE: f64 = 1e-8;

fn conjugate(p: f64) -> f64 {
    p / (p - 1.0)
}

fn check_np(n: usize, p: f64) -> Result<()> {
    if n == 0 || !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParams(format!("need n >= 1 and p > 1, got n={n}, p={p}")));
    }
    Ok(())
}

/// `c_{n,p} = (p q^{p-1})^{-n/p} pi^{-n/2} Gamma(n/2+1) / Gamma(n/q+1)`.
pub fn c_np(n: usize, p: f64) -> Result<f64> {
    check_np(n, p)?;
    let q = conjugate(p);
    let nf = n as f64;
    let log_c = -(nf / p) * (p.ln() + (p - 1.0) * q.ln()) - 0.5 * nf * std::f64::consts::PI.ln()
        + ln_gamma(0.5 * nf + 1.0)
        - ln_gamma(nf / q + 1.0);
    Ok(log_c.exp())
}

/// Coefficient `(p-1)/p^q` of `|x|^q / w^q` in the self-similar profile.
pub fn profile_rate(p: f64) -> f64 {
    (p - 1.0) / p.powf(conjugate(p))
}

/// Mass of the self-similar profile with scale `w` outside the ball of `radius`.
///
/// `s = k |x|^q / w^q` is Gamma(n/q)-distributed under the profile, so this is
/// the regularised upper incomplete gamma function.
pub fn tail_mass(n: usize, p: f64, w: f64, radius: f64) -> Result<f64> {
    check_np(n, p)?;
    let q = conjugate(p);
    let s = profile_rate(p) * (radius / w).powf(q);
    Ok(gamma_ur(n as f64 / q, s))
}

/// Smallest half-width (rounded up to a multiple of `quantum`) whose inscribed
/// ball leaves less than `tol` of the mass of the profile with scale `w_max` outside.
pub fn half_width_for_tail(n: usize, p: f64, w_max: f64, tol: f64, quantum: f64) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = w_max.max(1.0);
    while tail_mass(n, p, w_max, hi)? >= tol {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if tail_mass(n, p, w_max, mid)? >= tol {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((hi / quantum).ceil() * quantum)
}

/// Model data of a special-solution family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpecialSolutionParams {
    pub n: usize,
    pub p: f64,
    pub c: f64,
    pub c_np: f64,
    /// Half-width `L` of the truncation box `[-L, L]^n`.
    pub half_width: f64,
}

impl SpecialSolutionParams {
    /// Chooses `L` so the tail mass stays below [`TAIL_TOLERANCE`] for scales up to `w_max`.
    pub fn new(n: usize, p: f64, c: f64, w_max: f64) -> Result<Self> {
        Ok(Self {
            n,
            p,
            c,
            c_np: c_np(n, p)?,
            half_width: half_width_for_tail(n, p, w_max, TAIL_TOLERANCE, 0.5)?,
        })
    }

    /// Box grid `[-L, L]^n` with `points` nodes per axis.
    pub fn grid(&self, points: usize) -> Result<GridSpec> {
        GridSpec::cube(
            self.n,
            -self.half_width,
            self.half_width,
            points,
            crate::fields::Topology::Box,
        )
    }
}

/// Density, its logarithm and the potential of a special solution at one instant.
#[derive(Clone, Debug)]
pub struct SpecialFields {
    pub rho: ScalarField,
    pub logrho: ScalarField,
    pub phi: ScalarField,
}

fn check_box(n: usize, grid: &GridSpec) -> Result<()> {
    if grid.is_periodic() {
        return Err(Error::Topology(
            "special solutions live on R^n and need a truncated-box grid".into(),
        ));
    }
    if grid.dim() != n {
        return Err(Error::ShapeMismatch(format!(
            "dimension {n} does not match a {}-dimensional grid",
            grid.dim()
        )));
    }
    Ok(())
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Samples `log rho = log c_{n,p} - n log w - k |x|^q / w^q` and
/// `phi = phi_coeff |x|^q + phi_shift`.
fn profile(
    n: usize,
    p: f64,
    w: f64,
    phi_coeff: f64,
    phi_shift: f64,
    grid: &GridSpec,
) -> Result<SpecialFields> {
    check_box(n, grid)?;
    let q = conjugate(p);
    let k = profile_rate(p) / w.powf(q);
    let log_norm = c_np(n, p)?.ln() - n as f64 * w.ln();
    let logrho = ScalarField::from_fn(*grid, |x| log_norm - k * radius(x).powf(q));
    let phi = ScalarField::from_fn(*grid, |x| phi_coeff * radius(x).powf(q) + phi_shift);
    Ok(SpecialFields {
        rho: logrho.map(f64::exp),
        logrho,
        phi,
    })
}

fn check_time(t: f64) -> Result<()> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParams(format!("special solutions need t > 0, got {t}")));
    }
    Ok(())
}

/// `rho = c_{n,p} t^{-n} exp(-(p-1)|x|^q/(pt)^q)`, `phi = |x|^q / (q t^{q-1})`.
pub fn special_geodesic(n: usize, p: f64, t: f64, grid: &GridSpec) -> Result<SpecialFields> {
    check_np(n, p)?;
    check_time(t)?;
    let q = conjugate(p);
    profile(n, p, t, 1.0 / (q * t.powf(q - 1.0)), 0.0, grid)
}

/// `rho = c_{n,p} t^{-n/p} exp(-(1/q)|x|^q/(pt)^{q-1})`,
/// `phi = |x|^q/(q (pt)^{q-1}) + (n/p) log t - log c_{n,p} - 1 = -log rho - 1`.
pub fn special_pheat(n: usize, p: f64, t: f64, grid: &GridSpec) -> Result<SpecialFields> {
    check_np(n, p)?;
    check_time(t)?;
    let q = conjugate(p);
    let shift = n as f64 / p * t.ln() - c_np(n, p)?.ln() - 1.0;
    profile(
        n,
        p,
        t.powf(1.0 / p),
        1.0 / (q * (p * t).powf(q - 1.0)),
        shift,
        grid,
    )
}

/// `rho = c_{n,p} w^{-n} exp(-((p-1)/p^q)|x|^q/w^q)`, `phi = (alpha^{q-1}/q)|x|^q + beta`.
pub fn special_langevin(
    n: usize,
    p: f64,
    scale: &ScaleState,
    grid: &GridSpec,
) -> Result<SpecialFields> {
    check_np(n, p)?;
    if !(scale.w > 0.0 && scale.alpha > 0.0) {
        return Err(Error::InvalidParams(format!(
            "scale state needs w > 0 and alpha > 0, got w={}, alpha={}",
            scale.w, scale.alpha
        )));
    }
    let q = conjugate(p);
    profile(n, p, scale.w, scale.alpha.powf(q - 1.0) / q, scale.beta, grid)
}

/// Exact time derivatives `(d/dt log rho, d/dt u, d/dt phi)` of the profile
/// with scale `scale` moving at `rates`.
pub fn special_time_derivatives(
    n: usize,
    p: f64,
    scale: &ScaleState,
    rates: &ScaleRates,
    grid: &GridSpec,
) -> Result<(ScalarField, VectorField, ScalarField)> {
    check_np(n, p)?;
    check_box(n, grid)?;
    let q = conjugate(p);
    let (w, wdot, alpha) = (scale.w, scale.wdot, scale.alpha);
    let k = profile_rate(p);
    let dlogrho = ScalarField::from_fn(*grid, |x| {
        -(n as f64) * wdot / w + q * k * radius(x).powf(q) * wdot / w.powf(q + 1.0)
    });
    let dcoef = (q - 1.0) * alpha.powf(q - 2.0) * rates.alphadot;
    let dphi = ScalarField::from_fn(*grid, |x| dcoef / q * radius(x).powf(q) + rates.betadot);
    let du = VectorField::from_fn(*grid, |x, out| {
        let r = radius(x);
        let f = if r > 0.0 { dcoef * r.powf(q - 2.0) } else { 0.0 };
        for (o, xi) in out.iter_mut().zip(x) {
            *o = f * xi;
        }
    });
    Ok((dlogrho, du, dphi))
}

/// Closed-form `Ent(rho) = -(n/q)(1 + log(c_{n,p}^{-q/n} w^q))` of the profile with scale `w`.
pub fn profile_entropy(n: usize, p: f64, w: f64) -> Result<f64> {
    let q = conjugate(p);
    let nf = n as f64;
    Ok(-(nf / q) * (1.0 - (q / nf) * c_np(n, p)?.ln() + q * w.ln()))
}

/// Closed-form Fisher term `((p-1)/p^{q-1}) n alpha^{2-q} / w^q`.
pub fn profile_fisher(n: usize, p: f64, w: f64, alpha: f64) -> f64 {
    let q = conjugate(p);
    (p - 1.0) / p.powf(q - 1.0) * n as f64 * alpha.powf(2.0 - q) / w.powf(q)
}
