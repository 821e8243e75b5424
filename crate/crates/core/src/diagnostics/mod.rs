//! Entropy and energy functionals along flows, and the identities between them.
//!
//! [`Functionals`] holds every instantaneous integral of one state. A
//! [`Recorder`] collects them during a run; the window checks in [`checks`]
//! then compare centred finite differences in time against the instantaneous
//! right-hand sides.

pub mod checks;
mod distance;
pub mod residual;

use std::io::Write;

pub use distance::{wq_distance_1d, CDF_SAMPLES};

use crate::closedform::{c_np, profile_fisher, ScaleState, ScaleTrajectory};
use crate::error::{Error, Result};
use crate::fields::{
    a_norm2, anisotropy, gradient, hessian, p_laplacian, quadrature, regularized_speed,
    a_inner, ModelParams, ScalarField,
};
use crate::flows::{hamiltonian_density, FlowState, Regime};

/// Densities below this contribute nothing to `rho log rho`.
pub const DENSITY_CUTOFF: f64 = 1e-14;
/// Floor applied before taking logarithms of a density.
pub const LOG_FLOOR: f64 = 1e-300;

fn rho_log_rho(rho: f64, logrho: f64) -> f64 {
    if rho < DENSITY_CUTOFF {
        0.0
    } else {
        rho * logrho
    }
}

/// Boltzmann entropy `int rho log rho`.
pub fn entropy(rho: &ScalarField) -> f64 {
    let f = rho.map(|r| rho_log_rho(r, r.max(LOG_FLOOR).ln()));
    quadrature(&f, None)
}

/// `(n/q)(1 + log(c_{n,p}^{-q/n} w^q))`, the offset turning `Ent` into a relative entropy.
pub fn entropy_offset(n: usize, p: f64, w: f64) -> Result<f64> {
    let q = p / (p - 1.0);
    let nf = n as f64;
    Ok(nf / q * (1.0 - q / nf * c_np(n, p)?.ln() + q * w.ln()))
}

/// `Ent_{n,p}(rho, t) = Ent(rho) + (n/q)(1 + log(c_{n,p}^{-q/n} t^q))`.
pub fn relative_entropy_np(rho: &ScalarField, t: f64, n: usize, p: f64) -> Result<f64> {
    Ok(entropy(rho) + entropy_offset(n, p, t)?)
}

/// `int |(|u|^2+eps)^{(p-2)/2} hess(phi) - lambda a|_A^2 rho`, the Hessian defect.
pub fn defect_integral(state: &FlowState, params: &ModelParams, lambda: f64) -> f64 {
    quadrature(&defect_density(state, params, lambda), None)
}

/// Pointwise defect integrand `|s hess(phi) - lambda a|_A^2 rho`.
pub fn defect_density(state: &FlowState, params: &ModelParams, lambda: f64) -> ScalarField {
    let s = regularized_speed(&state.u, params);
    let (big_a, small_a) = anisotropy(&state.u, params);
    let t = hessian(&state.phi).scaled_by(&s);
    let lam = ScalarField::constant(*state.grid(), lambda);
    let m = t.sub_scaled(&lam, &small_a);
    a_norm2(&m, &big_a).zip_map(&state.rho(), |x, r| x * r)
}

/// Instantaneous integrals of one flow state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Functionals {
    pub t: f64,
    pub mass: f64,
    pub ent: f64,
    /// `K = int (|u|^2+eps)^{p/2} rho`.
    pub kinetic: f64,
    /// `P = int phi rho`.
    pub potential: f64,
    /// `int s |grad log rho|_A^2 rho`.
    pub fisher: f64,
    /// `int s^2 |hess phi|_A^2 rho`.
    pub bochner: f64,
    /// `int s <grad phi, grad rho>`.
    pub ent_rate_flux: f64,
    /// `-int rho Delta_p phi`.
    pub ent_rate_plap: f64,
    /// `int s |u|^2 rho`, the exact dissipation of the discrete Hamiltonian.
    pub dissipation: f64,
    /// Defect with `lambda = 1/t`.
    pub defect_t: f64,
    /// Defect with `lambda = alpha(t)` of the scale trajectory.
    pub defect_alpha: f64,
    pub curl_max: f64,
    pub curl_l1: f64,
    pub consistency: f64,
    /// Scale state at `t`, if a trajectory was supplied.
    pub scale: Option<ScaleState>,
}

impl Functionals {
    pub fn compute(state: &FlowState, params: &ModelParams, scale: Option<ScaleState>) -> Self {
        let grid = *state.grid();
        let rho = state.rho();
        let s = regularized_speed(&state.u, params);
        let (big_a, _) = anisotropy(&state.u, params);
        let h = hamiltonian_density(&state.u, params);
        let w = |f: &ScalarField| quadrature(f, Some(&rho));

        let glr = gradient(&state.logrho);
        let fisher = w(&a_inner(&glr, &glr, &big_a).zip_map(&s, |x, y| x * y));
        let hess = hessian(&state.phi).scaled_by(&s);
        let bochner = w(&a_norm2(&hess, &big_a));

        let gphi = gradient(&state.phi);
        let sphi = regularized_speed(&gphi, params);
        let flux = gphi.dot(&gradient(&rho)).zip_map(&sphi, |x, y| x * y);
        let plap = p_laplacian(&state.phi, params);

        let ent = quadrature(
            &state.logrho.zip_map(&rho, |lr, r| rho_log_rho(r, lr)),
            None,
        );
        let t = state.t;
        let (curl_max, curl_l1) = state.curl_norms();
        let alpha = scale.map_or(f64::NAN, |sc| sc.alpha);
        Self {
            t,
            mass: quadrature(&rho, None),
            ent,
            kinetic: params.p() * w(&h),
            potential: w(&state.phi),
            fisher,
            bochner,
            ent_rate_flux: quadrature(&flux, None),
            ent_rate_plap: -w(&plap),
            dissipation: w(&state.u.norm_sq().zip_map(&s, |x, y| x * y)),
            defect_t: if t > 0.0 { defect_integral(state, params, 1.0 / t) } else { f64::NAN },
            defect_alpha: if alpha.is_finite() { defect_integral(state, params, alpha) } else { f64::NAN },
            curl_max,
            curl_l1,
            consistency: if state.regime == Regime::Pheat || grid.dim() == 0 { 0.0 } else { state.consistency() },
            scale,
        }
    }
}

/// Collects [`Functionals`] at every observed state of a run.
#[derive(Clone, Debug)]
pub struct Recorder {
    params: ModelParams,
    regime: Regime,
    scale: Option<ScaleTrajectory>,
    series: Vec<Functionals>,
}

impl Recorder {
    pub fn new(params: ModelParams, regime: Regime, scale: Option<ScaleTrajectory>) -> Self {
        Self { params, regime, scale, series: Vec::new() }
    }

    pub fn observe(&mut self, state: &FlowState) -> Result<()> {
        let sc = match &self.scale {
            Some(tr) => Some(tr.state_at(state.t)?),
            None => None,
        };
        self.series.push(Functionals::compute(state, &self.params, sc));
        Ok(())
    }

    pub fn series(&self) -> &[Functionals] {
        &self.series
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn scale(&self) -> Option<&ScaleTrajectory> {
        self.scale.as_ref()
    }

    pub fn records(&self) -> Result<Vec<DiagnosticsRecord>> {
        build_records(&self.series, &self.params, self.regime)
    }
}

/// One row of `diagnostics.csv`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub ent: f64,
    pub ent_np: f64,
    pub w_np: f64,
    pub dw_np_dt_lhs: f64,
    pub dw_np_dt_rhs: f64,
    pub ent_cnp: f64,
    pub w_cnp: f64,
    pub i_cnp: f64,
    pub h_c: f64,
    pub l_c: f64,
    pub k: f64,
    pub p: f64,
    pub curl_max: f64,
    pub defect: f64,
}

pub const CSV_HEADER: &str =
    "t,mass,Ent,Ent_np,W_np,dW_np_dt_lhs,dW_np_dt_rhs,Ent_cnp,W_cnp,I_cnp,H_c,L_c,K,P,curl_max,defect";

impl DiagnosticsRecord {
    pub fn values(&self) -> [f64; 16] {
        [
            self.t,
            self.mass,
            self.ent,
            self.ent_np,
            self.w_np,
            self.dw_np_dt_lhs,
            self.dw_np_dt_rhs,
            self.ent_cnp,
            self.w_cnp,
            self.i_cnp,
            self.h_c,
            self.l_c,
            self.k,
            self.p,
            self.curl_max,
            self.defect,
        ]
    }
}

/// Uniform record spacing of a series, or an error if it is not uniform.
pub fn record_spacing(series: &[Functionals]) -> Result<f64> {
    if series.len() < 2 {
        return Err(Error::Window("need at least two records".into()));
    }
    let dt = (series[series.len() - 1].t - series[0].t) / (series.len() - 1) as f64;
    for pair in series.windows(2) {
        if ((pair[1].t - pair[0].t) - dt).abs() > 1e-9 * dt.max(1.0) {
            return Err(Error::Window("records are not evenly spaced".into()));
        }
    }
    Ok(dt)
}

pub(crate) fn fd1(x: &[f64], k: usize, dt: f64) -> f64 {
    if k == 0 || k + 1 >= x.len() {
        return f64::NAN;
    }
    (x[k + 1] - x[k - 1]) / (2.0 * dt)
}

pub(crate) fn fd2(x: &[f64], k: usize, dt: f64) -> f64 {
    if k == 0 || k + 1 >= x.len() {
        return f64::NAN;
    }
    (x[k + 1] - 2.0 * x[k] + x[k - 1]) / (dt * dt)
}

/// `(H_c, L_c)` for the given regime; NaN where a regime defines no such quantity.
pub fn hamiltonian_lagrangian(f: &Functionals, params: &ModelParams, regime: Regime) -> (f64, f64) {
    let cp = params.c_pow_p();
    let (p, q) = (params.p(), params.q());
    match regime {
        Regime::Langevin => (cp / p * f.kinetic + f.ent, cp / q * f.kinetic - f.ent),
        Regime::LangevinBackward => (cp / q * f.kinetic + f.ent, f64::NAN),
        Regime::Pheat => (f.ent, -f.ent),
        Regime::Geodesic => (f64::NAN, f64::NAN),
    }
}

/// Relative entropy `Ent_{c,n,p}` at one record (NaN without a scale state).
pub fn ent_cnp(f: &Functionals, params: &ModelParams) -> f64 {
    match f.scale {
        Some(s) => f.ent + entropy_offset(params.dim(), params.p(), s.w).unwrap_or(f64::NAN),
        None => f64::NAN,
    }
}

/// Relative Fisher information `I_{c,n,p}` at one record.
pub fn i_cnp(f: &Functionals, params: &ModelParams) -> f64 {
    match f.scale {
        Some(s) => f.fisher - profile_fisher(params.dim(), params.p(), s.w, s.alpha),
        None => f64::NAN,
    }
}

/// Langevin W-entropy `W = Ent_cnp + eta d/dt Ent_cnp` at every record (NaN at the ends).
pub fn w_cnp_series(series: &[Functionals], params: &ModelParams) -> Result<Vec<f64>> {
    let dt = record_spacing(series)?;
    let e: Vec<f64> = series.iter().map(|f| ent_cnp(f, params)).collect();
    Ok((0..series.len())
        .map(|k| match series[k].scale {
            Some(s) => e[k] + s.eta * fd1(&e, k, dt),
            None => f64::NAN,
        })
        .collect())
}

pub fn build_records(
    series: &[Functionals],
    params: &ModelParams,
    regime: Regime,
) -> Result<Vec<DiagnosticsRecord>> {
    let n = params.dim();
    let p = params.p();
    let dt = if series.len() >= 2 { record_spacing(series)? } else { 1.0 };
    let ent_np: Vec<f64> = series
        .iter()
        .map(|f| if f.t > 0.0 { f.ent + entropy_offset(n, p, f.t).unwrap_or(f64::NAN) } else { f64::NAN })
        .collect();
    let t_ent_np: Vec<f64> = series.iter().zip(&ent_np).map(|(f, e)| f.t * e).collect();
    let w_cnp = if series.len() >= 2 { w_cnp_series(series, params)? } else { vec![f64::NAN; series.len()] };
    Ok(series
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let (h_c, l_c) = hamiltonian_lagrangian(f, params, regime);
            DiagnosticsRecord {
                t: f.t,
                mass: f.mass,
                ent: f.ent,
                ent_np: ent_np[k],
                w_np: fd1(&t_ent_np, k, dt),
                dw_np_dt_lhs: fd2(&t_ent_np, k, dt),
                dw_np_dt_rhs: f.t * f.defect_t,
                ent_cnp: ent_cnp(f, params),
                w_cnp: w_cnp[k],
                i_cnp: i_cnp(f, params),
                h_c,
                l_c,
                k: f.kinetic,
                p: f.potential,
                curl_max: f.curl_max,
                defect: f.defect_alpha,
            }
        })
        .collect())
}

/// Writes records as CSV; non-finite entries are written as `NaN`.
pub fn write_csv(mut w: impl Write, records: &[DiagnosticsRecord]) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        let row: Vec<String> = r
            .values()
            .iter()
            .map(|v| if v.is_finite() { format!("{v:.12e}") } else { "NaN".to_string() })
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closedform::{profile_entropy, special_geodesic, SpecialSolutionParams};
    use crate::fields::{GridSpec, Topology, VectorField};
    use crate::flows::perturbed_state;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn uniform_entropy_is_minus_log_volume() {
        let g = GridSpec::cube(2, 0.0, 3.0, 16, Topology::Periodic).unwrap();
        let rho = ScalarField::constant(g, 1.0 / 9.0);
        assert!((entropy(&rho) + 9.0f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn gaussian_entropy() {
        let sp = SpecialSolutionParams::new(1, 2.0, f64::INFINITY, 1.0).unwrap();
        let g = sp.grid(512).unwrap();
        let s = special_geodesic(1, 2.0, 1.0, &g).unwrap();
        let expected = -0.5 * (1.0 + (4.0 * PI).ln());
        assert!((entropy(&s.rho) - expected).abs() < 1e-5);
        assert!((profile_entropy(1, 2.0, 1.0).unwrap() - expected).abs() < 1e-13);
        assert!(relative_entropy_np(&s.rho, 1.0, 1, 2.0).unwrap().abs() < 1e-5);
    }

    #[test]
    fn entropy_rate_dual_forms_agree() {
        for (n, pts, p) in [(1usize, 128usize, 3.0), (2, 48, 2.5), (2, 48, 1.5)] {
            let g = GridSpec::cube(n, 0.0, TAU, pts, Topology::Periodic).unwrap();
            let st = perturbed_state(Regime::Geodesic, &g, 1.0, 11, 0.4).unwrap();
            let m = ModelParams::new(p, f64::INFINITY, 1e-8, n).unwrap();
            let f = Functionals::compute(&st, &m, None);
            assert!((f.ent_rate_flux - f.ent_rate_plap).abs() <= 1e-10, "{f:?}");
        }
    }

    #[test]
    fn stationary_state_has_zero_hamiltonian_rate() {
        let g = GridSpec::cube(1, 0.0, 2.0, 32, Topology::Periodic).unwrap();
        let lr = -(2.0f64).ln();
        let st = FlowState {
            t: 1.0,
            logrho: ScalarField::constant(g, lr),
            u: VectorField::zeros(g),
            phi: ScalarField::constant(g, -lr - 1.0),
            regime: Regime::Langevin,
        };
        let m = ModelParams::new(2.0, 1.0, 0.0, 1).unwrap();
        let f = Functionals::compute(&st, &m, None);
        assert_eq!(f.kinetic, 0.0);
        assert_eq!(f.dissipation, 0.0);
        assert_eq!(f.ent_rate_flux, 0.0);
    }

    #[test]
    fn csv_layout() {
        let r = DiagnosticsRecord {
            t: 1.0,
            mass: 1.0,
            ent: 0.0,
            ent_np: f64::NAN,
            w_np: 0.0,
            dw_np_dt_lhs: 0.0,
            dw_np_dt_rhs: 0.0,
            ent_cnp: 0.0,
            w_cnp: 0.0,
            i_cnp: 0.0,
            h_c: 0.0,
            l_c: 0.0,
            k: 0.0,
            p: 0.0,
            curl_max: 0.0,
            defect: 0.0,
        };
        let mut out = Vec::new();
        write_csv(&mut out, &[r]).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), CSV_HEADER);
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 16);
        assert_eq!(row.split(',').nth(3).unwrap(), "NaN");
    }
}
