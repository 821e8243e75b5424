//! Identity checks over a recorded series of [`Functionals`].
//!
//! Every left-hand side is a centred finite difference of recorded integrals;
//! every right-hand side is an instantaneous integral. Neither is derived
//! from the other.

use super::{
    ent_cnp, entropy_offset, fd1, fd2, hamiltonian_lagrangian, i_cnp, record_spacing,
    w_cnp_series, Functionals,
};
use crate::error::{Error, Result};
use crate::fields::ModelParams;
use crate::flows::Regime;

/// Paired left- and right-hand sides of one identity at interior records.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IdentitySeries {
    pub t: Vec<f64>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl IdentitySeries {
    fn push(&mut self, t: f64, lhs: f64, rhs: f64) {
        self.t.push(t);
        self.lhs.push(lhs);
        self.rhs.push(rhs);
    }

    /// `max |lhs - rhs| / max |rhs|`.
    pub fn relative_gap(&self) -> f64 {
        let scale = self.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.absolute_gap() / scale
    }

    pub fn absolute_gap(&self) -> f64 {
        self.lhs
            .iter()
            .zip(&self.rhs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn min_lhs(&self) -> f64 {
        self.lhs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_rhs(&self) -> f64 {
        self.rhs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

fn window(series: &[Functionals], min: usize) -> Result<f64> {
    if series.len() < min {
        return Err(Error::Window(format!(
            "need at least {min} records, got {}",
            series.len()
        )));
    }
    record_spacing(series)
}

fn column(series: &[Functionals], f: impl Fn(&Functionals) -> f64) -> Vec<f64> {
    series.iter().map(f).collect()
}

/// `d/dt W_{n,p}` by a second difference of `t Ent_{n,p}` against `t int |s hess phi - a/t|_A^2 rho`.
pub fn w_entropy_np(series: &[Functionals], params: &ModelParams) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    let (n, p) = (params.dim(), params.p());
    let mut te = Vec::with_capacity(series.len());
    for f in series {
        te.push(f.t * (f.ent + entropy_offset(n, p, f.t)?));
    }
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        out.push(series[k].t, fd2(&te, k, dt), series[k].t * series[k].defect_t);
    }
    Ok(out)
}

/// Second difference of `E(t) = t Ent + n t log t` against the W-entropy defect.
pub fn convexity(series: &[Functionals], n: usize) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    let e = column(series, |f| f.t * f.ent + n as f64 * f.t * f.t.ln());
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        out.push(series[k].t, fd2(&e, k, dt), series[k].t * series[k].defect_t);
    }
    Ok(out)
}

/// `Ent'' + ((p-1)/c^p) Ent' + (1/c^p) int s |grad log rho|_A^2 rho` against
/// `int s^2 |hess phi|_A^2 rho`. For `c = inf` this is `Ent'' = int s^2 |hess phi|_A^2 rho`.
pub fn entropy_dissipation(series: &[Functionals], params: &ModelParams) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    let k_inv = params.inv_c_pow_p();
    let a = (params.p() - 1.0) * k_inv;
    let e = column(series, |f| f.ent);
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        let f = &series[k];
        let lhs = fd2(&e, k, dt) + a * fd1(&e, k, dt) + k_inv * f.fisher;
        out.push(f.t, lhs, f.bochner);
    }
    Ok(out)
}

/// W-entropy-information identity `(1/eta) W' + I/c^p = int |s hess phi - alpha a|_A^2 rho`,
/// evaluated at records with `t >= start`, where `|eta|` is away from zero when the
/// lower limit is the run start.
pub fn wie(series: &[Functionals], params: &ModelParams, start: f64) -> Result<IdentitySeries> {
    let dt = window(series, 5)?;
    if series.iter().any(|f| f.scale.is_none()) {
        return Err(Error::Window("the W-entropy-information check needs a scale trajectory".into()));
    }
    let w = w_cnp_series(series, params)?;
    let k_inv = params.inv_c_pow_p();
    let mut out = IdentitySeries::default();
    for k in 2..series.len() - 2 {
        let f = &series[k];
        if f.t < start {
            continue;
        }
        let eta = f.scale.map_or(f64::NAN, |s| s.eta);
        let lhs = fd1(&w, k, dt) / eta + k_inv * i_cnp(f, params);
        out.push(f.t, lhs, f.defect_alpha);
    }
    if out.is_empty() {
        return Err(Error::Window(format!("no records at or after t = {start}")));
    }
    Ok(out)
}

/// `dH_c/dt` against its law: `-K` for the forward Langevin and p-heat regimes,
/// `p int s <grad phi, grad rho> - (p-1) K` for the backward regime.
pub fn hamiltonian_rate(
    series: &[Functionals],
    params: &ModelParams,
    regime: Regime,
) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    if regime == Regime::Geodesic {
        return Err(Error::InvalidParams("H_c is not defined for c = inf".into()));
    }
    let p = params.p();
    let h = column(series, |f| hamiltonian_lagrangian(f, params, regime).0);
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        let f = &series[k];
        let rhs = match regime {
            Regime::LangevinBackward => p * f.ent_rate_flux - (p - 1.0) * f.kinetic,
            _ => -f.kinetic,
        };
        out.push(f.t, fd1(&h, k, dt), rhs);
    }
    Ok(out)
}

/// `dL_c/dt = -p int s <grad phi, grad rho> - (p-1) K` (forward Langevin).
pub fn lagrangian_rate(series: &[Functionals], params: &ModelParams) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    let p = params.p();
    let l = column(series, |f| hamiltonian_lagrangian(f, params, Regime::Langevin).1);
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        let f = &series[k];
        out.push(f.t, fd1(&l, k, dt), -p * f.ent_rate_flux - (p - 1.0) * f.kinetic);
    }
    Ok(out)
}

/// `d^2 H_c/dt^2 = (p/c^p)(-int rho Delta_p phi + K)` (forward Langevin).
pub fn hamiltonian_second(series: &[Functionals], params: &ModelParams) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    let p = params.p();
    let k_inv = params.inv_c_pow_p();
    let h = column(series, |f| hamiltonian_lagrangian(f, params, Regime::Langevin).0);
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        let f = &series[k];
        out.push(f.t, fd2(&h, k, dt), p * k_inv * (f.ent_rate_plap + f.kinetic));
    }
    Ok(out)
}

/// Largest step-to-step increase of `H_c`, relative to `max |H_c|`.
pub fn hamiltonian_max_increase(series: &[Functionals], params: &ModelParams, regime: Regime) -> f64 {
    let h = column(series, |f| hamiltonian_lagrangian(f, params, regime).0);
    let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    h.windows(2).fold(f64::NEG_INFINITY, |m, w| m.max(w[1] - w[0])) / scale
}

/// Smallest second difference of the backward-regime Hamiltonian.
pub fn hamiltonian_min_curvature(series: &[Functionals], params: &ModelParams) -> Result<f64> {
    let dt = window(series, 3)?;
    let h = column(series, |f| hamiltonian_lagrangian(f, params, Regime::LangevinBackward).0);
    Ok((1..h.len() - 1).map(|k| fd2(&h, k, dt)).fold(f64::INFINITY, f64::min))
}

/// `max |K(t) - K(t0)| / |K(t0)|`.
pub fn kinetic_drift(series: &[Functionals]) -> f64 {
    let k0 = series[0].kinetic;
    series.iter().fold(0.0f64, |m, f| m.max((f.kinetic - k0).abs())) / k0.abs()
}

/// `dP/dt` against `K/q` along a geodesic run.
pub fn mean_potential_rate(series: &[Functionals], params: &ModelParams) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    let pot = column(series, |f| f.potential);
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        out.push(series[k].t, fd1(&pot, k, dt), series[k].kinetic / params.q());
    }
    Ok(out)
}

/// `dEnt/dt` against `-int rho Delta_p phi` (and the flux form of the same).
pub fn entropy_rate(series: &[Functionals]) -> Result<IdentitySeries> {
    let dt = window(series, 3)?;
    let e = column(series, |f| f.ent);
    let mut out = IdentitySeries::default();
    for k in 1..series.len() - 1 {
        out.push(series[k].t, fd1(&e, k, dt), series[k].ent_rate_plap);
    }
    Ok(out)
}

/// Relative Boltzmann entropy `Ent_{c,n,p}` of every record.
pub fn ent_cnp_column(series: &[Functionals], params: &ModelParams) -> Vec<f64> {
    column(series, |f| ent_cnp(f, params))
}

/// Largest step-to-step growth of `int |curl u|`, relative to its initial value.
pub fn curl_max_growth(series: &[Functionals]) -> f64 {
    let c0 = series[0].curl_l1;
    series
        .windows(2)
        .fold(f64::NEG_INFINITY, |m, w| m.max(w[1].curl_l1 - w[0].curl_l1))
        / c0
}
