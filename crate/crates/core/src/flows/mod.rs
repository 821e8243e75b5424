//! Time integration of the geodesic, Langevin and p-heat regimes.
//!
//! The state is `(log rho, u, phi)` with `u` the velocity potential gradient
//! and `phi` carried alongside it. Steps are classical RK4 with a step size
//! fixed at the start of a run from the CFL bound and re-checked every step.

mod initial;
mod rhs;

use std::fmt;
use std::str::FromStr;

pub use initial::{perturbed_state, rotational_state, special_state, user_state, TrigPoly};
pub use rhs::{
    geodesic_rhs, hamiltonian_density, langevin_rhs, pheat_rhs, rhs, Direction,
};

use crate::closedform::{solve_scale_ode, ScaleTrajectory};
use crate::error::{Error, Result};
use crate::fields::{
    curl2d, gradient, quadrature, regularized_speed, GridSpec, ModelParams, ScalarField,
    VectorField,
};

/// Hard CFL number above which a step is refused.
pub const CFL_LIMIT: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Geodesic,
    Langevin,
    LangevinBackward,
    Pheat,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Self::Geodesic => "geodesic",
            Self::Langevin => "langevin",
            Self::LangevinBackward => "langevin-backward",
            Self::Pheat => "pheat",
        }
    }

    /// Checks that the coupling `c` matches the regime.
    pub fn check_coupling(self, c: f64) -> Result<()> {
        let ok = match self {
            Self::Geodesic => c.is_infinite(),
            Self::Pheat => c == 0.0,
            Self::Langevin | Self::LangevinBackward => c > 0.0 && c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "regime {} is incompatible with c = {c}",
                self.name()
            )))
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "geodesic" => Self::Geodesic,
            "langevin" => Self::Langevin,
            "langevin-backward" => Self::LangevinBackward,
            "pheat" => Self::Pheat,
            _ => return Err(Error::Config(format!("unknown regime `{s}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub logrho: ScalarField,
    pub u: VectorField,
    pub phi: ScalarField,
    pub regime: Regime,
}

/// Time derivative of a [`FlowState`].
#[derive(Clone, Debug)]
pub struct FlowRate {
    pub logrho: ScalarField,
    pub u: VectorField,
    pub phi: ScalarField,
}

impl FlowState {
    pub fn grid(&self) -> &GridSpec {
        self.logrho.grid()
    }

    pub fn rho(&self) -> ScalarField {
        self.logrho.map(f64::exp)
    }

    pub fn mass(&self) -> f64 {
        quadrature(&self.rho(), None)
    }

    /// `max |u - grad(phi)|`.
    pub fn consistency(&self) -> f64 {
        let g = gradient(&self.phi);
        let mut m: f64 = 0.0;
        for (a, b) in self.u.components().iter().zip(g.components()) {
            for (x, y) in a.iter().zip(b) {
                m = m.max((x - y).abs());
            }
        }
        m
    }

    /// `(max |curl u|, integral |curl u|)` in 2D, zeros in 1D.
    pub fn curl_norms(&self) -> (f64, f64) {
        match curl2d(&self.u) {
            Ok(w) => (w.max_abs(), quadrature(&w.map(f64::abs), None)),
            Err(_) => (0.0, 0.0),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.logrho.is_finite() && self.u.is_finite() && self.phi.is_finite()
    }

    fn advanced(&self, rate: &FlowRate, h: f64) -> FlowState {
        let axpy = |x: &ScalarField, y: &ScalarField| x.zip_map(y, |a, b| a + h * b);
        let mut u = self.u.clone();
        for (c, r) in u.components_mut().iter_mut().zip(rate.u.components()) {
            for (a, b) in c.iter_mut().zip(r) {
                *a += h * b;
            }
        }
        FlowState {
            t: self.t + h,
            logrho: axpy(&self.logrho, &rate.logrho),
            u,
            phi: axpy(&self.phi, &rate.phi),
            regime: self.regime,
        }
    }
}

/// Largest stable step for `state` at CFL number `sigma`, capped by `dt_max`.
///
/// Hyperbolic regimes use `h / (|v| + sqrt(max(1, p-1) s / c^p))` together with
/// the relaxation time `c^p`; the p-heat regime uses the parabolic bound
/// `h^2 / (2 n max(1, p-1) s)`.
pub fn cfl_dt(state: &FlowState, params: &ModelParams, sigma: f64, dt_max: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(Error::InvalidParams(format!("CFL number must lie in (0, 1), got {sigma}")));
    }
    let grid = state.grid();
    let h = grid.min_spacing();
    let gain = (params.p() - 1.0).max(1.0);
    let speed = regularized_speed(&state.u, params);
    let dt = if state.regime == Regime::Pheat {
        let m = speed.max_abs() * gain;
        sigma * h * h / (2.0 * grid.dim() as f64 * m)
    } else {
        let inv_cp = params.inv_c_pow_p();
        let mut wave: f64 = 0.0;
        for k in 0..grid.len() {
            let u = state.u.at(k);
            let s = speed.values()[k];
            let unorm = (u[0] * u[0] + u[1] * u[1]).sqrt();
            wave = wave.max(s * unorm + (gain * s * inv_cp).sqrt());
        }
        let relax = if inv_cp > 0.0 { sigma / inv_cp } else { f64::INFINITY };
        (sigma * h / wave).min(relax)
    };
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Cfl { t: state.t, reason: format!("non-finite wave speed (dt = {dt})") });
    }
    Ok(dt.min(dt_max))
}

/// One classical RK4 step.
pub fn rk4_step(state: &FlowState, params: &ModelParams, dt: f64) -> Result<FlowState> {
    let k1 = rhs(state, params)?;
    let k2 = rhs(&state.advanced(&k1, 0.5 * dt), params)?;
    let k3 = rhs(&state.advanced(&k2, 0.5 * dt), params)?;
    let k4 = rhs(&state.advanced(&k3, dt), params)?;
    let mut next = state.clone();
    for (k, w) in [(&k1, 1.0), (&k2, 2.0), (&k3, 2.0), (&k4, 1.0)] {
        next = next.advanced(k, dt * w / 6.0);
    }
    next.t = state.t + dt;
    if !next.is_finite() {
        return Err(Error::NonFinite(format!("flow state after step to t = {}", next.t)));
    }
    Ok(next)
}

/// Monitor thresholds. Growth monitors trip at `factor * initial + floor`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub mass: f64,
    pub consistency_factor: Option<f64>,
    pub curl_factor: Option<f64>,
    pub floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { mass: 1e-6, consistency_factor: Some(10.0), curl_factor: Some(10.0), floor: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    /// Self-similar profile at `t0`, scale from [`RunConfig::scale_trajectory`].
    Special,
    Perturbed { seed: u64, amplitude: f64 },
    Rotational { seed: u64, amplitude: f64, swirl: f64 },
    Fields { rho: ScalarField, phi: ScalarField },
}

/// Scale-ODE settings for the self-similar data and the Langevin W-entropy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleSettings {
    pub w0: f64,
    pub wdot0: f64,
    pub beta0: f64,
    pub dt: f64,
    pub eta_lower: Option<f64>,
}

impl Default for ScaleSettings {
    fn default() -> Self {
        Self { w0: 1.0, wdot0: 1.0, beta0: 0.0, dt: 1e-4, eta_lower: None }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: GridSpec,
    pub regime: Regime,
    pub t0: f64,
    pub t_end: f64,
    pub sigma: f64,
    pub dt_max: f64,
    /// Steps between observer calls.
    pub diag_every: usize,
    pub tolerances: Tolerances,
    pub initial: InitialCondition,
    pub scale: ScaleSettings,
}

impl RunConfig {
    pub fn new(params: ModelParams, grid: GridSpec, regime: Regime, t0: f64, t_end: f64) -> Self {
        Self {
            params,
            grid,
            regime,
            t0,
            t_end,
            sigma: 0.4,
            dt_max: 1e-2,
            diag_every: 1,
            tolerances: Tolerances::default(),
            initial: InitialCondition::Special,
            scale: ScaleSettings::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.regime.check_coupling(self.params.c())?;
        if self.params.dim() != self.grid.dim() {
            return Err(Error::ShapeMismatch(format!(
                "model dimension {} differs from grid dimension {}",
                self.params.dim(),
                self.grid.dim()
            )));
        }
        if !(self.t_end > self.t0) {
            return Err(Error::InvalidParams(format!("need T > t0, got [{}, {}]", self.t0, self.t_end)));
        }
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::InvalidParams(format!("sigma must lie in (0, 1), got {}", self.sigma)));
        }
        if !(self.dt_max > 0.0) || self.diag_every == 0 {
            return Err(Error::InvalidParams("dt-max and diag-every must be positive".into()));
        }
        Ok(())
    }

    /// Scale trajectory over `[t0, T]` with beta solved for the model dimension.
    pub fn scale_trajectory(&self) -> Result<ScaleTrajectory> {
        let s = &self.scale;
        let mut tr = solve_scale_ode(self.params.c(), self.params.p(), s.w0, s.wdot0, self.t0, self.t_end, s.dt)?
            .with_beta(self.params.dim(), s.beta0)?;
        if let Some(lower) = s.eta_lower {
            tr = tr.with_eta_lower(lower)?;
        }
        Ok(tr)
    }

    pub fn initial_state(&self) -> Result<FlowState> {
        match &self.initial {
            InitialCondition::Special => {
                let tr = self.scale_trajectory()?;
                special_state(self.regime, &self.params, &self.grid, &tr.states()[0])
            }
            InitialCondition::Perturbed { seed, amplitude } => {
                perturbed_state(self.regime, &self.grid, self.t0, *seed, *amplitude)
            }
            InitialCondition::Rotational { seed, amplitude, swirl } => {
                rotational_state(self.regime, &self.grid, self.t0, *seed, *amplitude, *swirl)
            }
            InitialCondition::Fields { rho, phi } => user_state(self.regime, rho, phi, self.t0),
        }
    }

    fn monitors_gradient_structure(&self) -> bool {
        !matches!(self.initial, InitialCondition::Rotational { .. })
    }
}

/// Outcome of a completed run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub dt: f64,
    pub records: usize,
    pub max_mass_drift: f64,
    pub max_consistency: f64,
    pub max_curl: f64,
}

/// Integrates from `init` to `config.t_end`, calling `observer` on the initial
/// state and then every `diag_every` steps (the final state always included).
pub fn run_from(
    config: &RunConfig,
    init: FlowState,
    mut observer: impl FnMut(&FlowState) -> Result<()>,
) -> Result<(FlowState, RunSummary)> {
    config.validate()?;
    let params = &config.params;
    let tol = &config.tolerances;
    let mass0 = init.mass();
    if (mass0 - 1.0).abs() > 1e-4 {
        return Err(Error::InvalidParams(format!("initial mass {mass0} is not 1")));
    }
    let dt0 = cfl_dt(&init, params, config.sigma, config.dt_max)?;
    let span = config.t_end - config.t0;
    let blocks = (span / dt0 / config.diag_every as f64 * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let steps = blocks * config.diag_every;
    let dt = span / steps as f64;

    let gradient_checks = config.monitors_gradient_structure() && init.regime != Regime::Pheat;
    let cons_limit = tol
        .consistency_factor
        .filter(|_| gradient_checks)
        .map(|f| f * init.consistency() + tol.floor);
    let curl_limit = tol
        .curl_factor
        .filter(|_| gradient_checks && init.grid().dim() == 2)
        .map(|f| f * init.curl_norms().0 + tol.floor);

    let mut summary = RunSummary {
        steps,
        dt,
        records: 0,
        max_mass_drift: 0.0,
        max_consistency: init.consistency(),
        max_curl: init.curl_norms().0,
    };
    let mut state = init;
    observer(&state)?;
    summary.records += 1;
    for step in 1..=steps {
        let allowed = cfl_dt(&state, params, CFL_LIMIT, f64::INFINITY)?;
        if dt > allowed {
            return Err(Error::Cfl {
                t: state.t,
                reason: format!("fixed step {dt:.3e} exceeds the stability bound {allowed:.3e}"),
            });
        }
        let t_next = if step == steps { config.t_end } else { config.t0 + step as f64 * dt };
        state = rk4_step(&state, params, dt)?;
        state.t = t_next;

        let drift = (state.mass() - mass0).abs();
        summary.max_mass_drift = summary.max_mass_drift.max(drift);
        if drift > tol.mass {
            return Err(Error::Monitor { monitor: "mass", t: state.t, measured: drift, tolerance: tol.mass });
        }
        if let Some(limit) = cons_limit {
            let c = state.consistency();
            summary.max_consistency = summary.max_consistency.max(c);
            if c > limit {
                return Err(Error::Monitor { monitor: "consistency", t: state.t, measured: c, tolerance: limit });
            }
        }
        if let Some(limit) = curl_limit {
            let c = state.curl_norms().0;
            summary.max_curl = summary.max_curl.max(c);
            if c > limit {
                return Err(Error::Monitor { monitor: "curl", t: state.t, measured: c, tolerance: limit });
            }
        }
        if step % config.diag_every == 0 {
            observer(&state)?;
            summary.records += 1;
        }
    }
    Ok((state, summary))
}

/// [`run_from`] with the configured initial condition.
pub fn run(
    config: &RunConfig,
    observer: impl FnMut(&FlowState) -> Result<()>,
) -> Result<(FlowState, RunSummary)> {
    let init = config.initial_state()?;
    run_from(config, init, observer)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Topology;
    use std::f64::consts::TAU;

    fn torus(n: usize, pts: usize) -> GridSpec {
        GridSpec::cube(n, 0.0, TAU, pts, Topology::Periodic).unwrap()
    }

    fn uniform(regime: Regime, grid: GridSpec) -> FlowState {
        let lr = -grid.domain_volume().ln();
        let logrho = ScalarField::constant(grid, lr);
        if regime == Regime::Pheat {
            return initial::slave_pheat(logrho, 1.0);
        }
        FlowState {
            t: 1.0,
            logrho,
            u: VectorField::zeros(grid),
            phi: ScalarField::constant(grid, -lr - 1.0),
            regime,
        }
    }

    #[test]
    fn stationary_states_have_zero_rate() {
        let g = torus(2, 16);
        let geo = ModelParams::geodesic(3.0, 2).unwrap();
        let r = geodesic_rhs(&uniform(Regime::Geodesic, g), &geo);
        assert_eq!(r.logrho.max_abs(), 0.0);
        assert_eq!(r.u.max_norm(), 0.0);
        assert!(r.phi.max_abs() <= 1e-12);

        let lan = ModelParams::new(2.0, 1.0, 1e-8, 2).unwrap();
        let r = langevin_rhs(&uniform(Regime::Langevin, g), &lan, Direction::Forward).unwrap();
        assert_eq!(r.u.max_norm(), 0.0);
        assert!(r.phi.max_abs() <= 1e-8);

        let heat = ModelParams::new(2.0, 0.0, 1e-8, 2).unwrap();
        assert_eq!(pheat_rhs(&uniform(Regime::Pheat, g), &heat).logrho.max_abs(), 0.0);
    }

    #[test]
    fn langevin_rejects_degenerate_coupling() {
        let g = torus(1, 16);
        for c in [0.0, f64::INFINITY] {
            let m = ModelParams::new(2.0, c, 1e-8, 1).unwrap();
            assert!(langevin_rhs(&uniform(Regime::Langevin, g), &m, Direction::Forward).is_err());
        }
    }

    #[test]
    fn langevin_tends_to_geodesic_for_large_c() {
        let g = torus(1, 64);
        let s = perturbed_state(Regime::Langevin, &g, 1.0, 7, 0.3).unwrap();
        let geo = geodesic_rhs(&s, &ModelParams::geodesic(2.0, 1).unwrap());
        for c in [10.0, 100.0] {
            let m = ModelParams::new(2.0, c, 1e-8, 1).unwrap();
            let lan = langevin_rhs(&s, &m, Direction::Forward).unwrap();
            let d = lan.u.component(0).iter().zip(geo.u.component(0)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(d <= 5.0 / (c * c), "c={c}: {d}");
        }
    }

    #[test]
    fn cfl_scaling() {
        let g = torus(1, 64);
        let geo = ModelParams::geodesic(2.0, 1).unwrap();
        let still = uniform(Regime::Geodesic, g);
        assert_eq!(cfl_dt(&still, &geo, 0.4, 0.05).unwrap(), 0.05);
        let mut s = uniform(Regime::Geodesic, g);
        s.u.components_mut()[0].iter_mut().for_each(|x| *x = 1.0);
        let dt1 = cfl_dt(&s, &geo, 0.4, 1.0).unwrap();
        s.u.components_mut()[0].iter_mut().for_each(|x| *x = 2.0);
        let dt2 = cfl_dt(&s, &geo, 0.4, 1.0).unwrap();
        assert!((dt1 / dt2 - 2.0).abs() < 1e-12);
        assert!(cfl_dt(&s, &geo, 1.5, 1.0).is_err());

        let heat = ModelParams::new(2.0, 0.0, 1e-8, 1).unwrap();
        let h1 = cfl_dt(&perturbed_state(Regime::Pheat, &torus(1, 64), 1.0, 3, 0.2).unwrap(), &heat, 0.4, 1.0).unwrap();
        let h2 = cfl_dt(&perturbed_state(Regime::Pheat, &torus(1, 128), 1.0, 3, 0.2).unwrap(), &heat, 0.4, 1.0).unwrap();
        assert!((h1 / h2 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn regime_coupling_and_names() {
        assert!(Regime::Geodesic.check_coupling(f64::INFINITY).is_ok());
        assert!(Regime::Geodesic.check_coupling(1.0).is_err());
        assert!(Regime::Pheat.check_coupling(0.0).is_ok());
        assert!(Regime::Langevin.check_coupling(0.0).is_err());
        for r in [Regime::Geodesic, Regime::Langevin, Regime::LangevinBackward, Regime::Pheat] {
            assert_eq!(r.name().parse::<Regime>().unwrap(), r);
        }
        assert!("euler".parse::<Regime>().is_err());
    }

    #[test]
    fn perturbed_data_is_seeded_and_normalised() {
        let g = torus(2, 32);
        let a = perturbed_state(Regime::Geodesic, &g, 1.0, 42, 0.3).unwrap();
        let b = perturbed_state(Regime::Geodesic, &g, 1.0, 42, 0.3).unwrap();
        let c = perturbed_state(Regime::Geodesic, &g, 1.0, 43, 0.3).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.mass() - 1.0).abs() < 1e-13);
        let bx = GridSpec::box_1d(-1.0, 1.0, 16).unwrap();
        assert!(perturbed_state(Regime::Geodesic, &bx, 1.0, 1, 0.3).is_err());
    }

    #[test]
    fn geodesic_torus_run_conserves_mass() {
        let g = torus(1, 128);
        let params = ModelParams::geodesic(2.0, 1).unwrap();
        let mut cfg = RunConfig::new(params, g, Regime::Geodesic, 1.0, 1.5);
        cfg.initial = InitialCondition::Perturbed { seed: 5, amplitude: 0.2 };
        let mut records = 0;
        let (end, summary) = run(&cfg, |_| {
            records += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(records, summary.records);
        assert_eq!(end.t, 1.5);
        assert!(summary.max_mass_drift < 1e-10, "{}", summary.max_mass_drift);
    }

    #[test]
    fn monitor_breach_is_reported() {
        let g = torus(1, 64);
        let params = ModelParams::geodesic(2.0, 1).unwrap();
        let mut cfg = RunConfig::new(params, g, Regime::Geodesic, 1.0, 1.2);
        cfg.initial = InitialCondition::Perturbed { seed: 5, amplitude: 0.2 };
        cfg.tolerances.mass = 0.0;
        cfg.tolerances.floor = 0.0;
        let err = run(&cfg, |_| Ok(())).unwrap_err();
        assert!(matches!(err, Error::Monitor { monitor: "mass", .. }), "{err}");
    }
}
