//! The scalar system behind the self-similar Langevin solutions:
//!
//! * `c^p w'' + (p-1) w' = ((p-1)/p^{q-1}) w'^{2-q} / w`, with `alpha = w'/w`,
//! * `c^p beta' + beta = n log w - log c_{n,p} - 1`,
//! * `eta = -w^2 e^{at} int_{t_l}^t w^{-2} e^{-as} ds`, `a = (p-1)/c^p`.
//!
//! `c = 0` and `c = inf` are separate closed-form modes.

use super::c_np;
use crate::error::{Error, Result};

/// Which scale law a trajectory follows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScaleMode {
    /// `c = 0`: `w = t^{1/p}`.
    Pheat,
    /// `0 < c < inf`: RK4 on the scale ODE.
    Finite(f64),
    /// `c = inf`: `w = t`.
    Geodesic,
}

impl ScaleMode {
    pub fn from_c(c: f64) -> Result<Self> {
        if c.is_nan() || c < 0.0 {
            return Err(Error::InvalidParams(format!("coupling c must lie in [0, inf], got {c}")));
        }
        Ok(if c == 0.0 {
            Self::Pheat
        } else if c.is_infinite() {
            Self::Geodesic
        } else {
            Self::Finite(c)
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleState {
    pub t: f64,
    pub w: f64,
    pub wdot: f64,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
}

/// Time derivatives of the scale variables at one state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleRates {
    pub wddot: f64,
    pub alphadot: f64,
    pub betadot: f64,
    pub etadot: f64,
}

/// Pointwise residuals of the scale equations, derivatives taken by
/// fourth-order finite differences of the stored trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaleResiduals {
    pub pode: f64,
    pub alphaeq: f64,
    /// `1 + eta' - eta (2 alpha + a)`, i.e. the eta relation multiplied through by `eta`
    /// so that it stays finite where `eta` vanishes. NaN in the p-heat mode.
    pub eta: f64,
}

#[derive(Clone, Debug)]
pub struct ScaleTrajectory {
    mode: ScaleMode,
    p: f64,
    dt: f64,
    /// Dimension used for beta; `None` until [`ScaleTrajectory::with_beta`].
    n: Option<usize>,
    eta_lower: f64,
    states: Vec<ScaleState>,
}

fn conj(p: f64) -> f64 {
    p / (p - 1.0)
}

/// Right-hand side `((p-1)/p^{q-1}) w'^{2-q} / w` of the scale ODE.
fn source(p: f64, w: f64, wdot: f64) -> f64 {
    let q = conj(p);
    (p - 1.0) / p.powf(q - 1.0) * wdot.powf(2.0 - q) / w
}

fn wddot(p: f64, cp: f64, w: f64, wdot: f64) -> f64 {
    (source(p, w, wdot) - (p - 1.0) * wdot) / cp
}

/// Evenly spaced step count covering `[t0, t_end]` with steps no longer than `dt`.
fn step_count(t0: f64, t_end: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParams(format!("dt must be positive, got {dt}")));
    }
    if !(t_end > t0 && t0.is_finite() && t_end.is_finite()) {
        return Err(Error::InvalidParams(format!("need t0 < T, got [{t0}, {t_end}]")));
    }
    let k = ((t_end - t0) / dt * (1.0 - 1e-12)).ceil() as usize;
    Ok(k.max(4))
}

/// Integrates the scale ODE from `(w0, wdot0)` at `t0` to `t_end`.
///
/// For `c = 0` and `c = inf` the closed forms are sampled instead and the
/// initial values are ignored. The eta lower limit defaults to `t0`.
pub fn solve_scale_ode(
    c: f64,
    p: f64,
    w0: f64,
    wdot0: f64,
    t0: f64,
    t_end: f64,
    dt: f64,
) -> Result<ScaleTrajectory> {
    if !(p.is_finite() && p > 1.0) {
        return Err(Error::InvalidParams(format!("p must exceed 1, got {p}")));
    }
    let mode = ScaleMode::from_c(c)?;
    let steps = step_count(t0, t_end, dt)?;
    let dt = (t_end - t0) / steps as f64;
    let time = |k: usize| if k == steps { t_end } else { t0 + k as f64 * dt };

    let states = match mode {
        ScaleMode::Geodesic | ScaleMode::Pheat => {
            if t0 <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "closed-form scale modes need t0 > 0, got {t0}"
                )));
            }
            (0..=steps)
                .map(|k| closed_state(mode, p, time(k)))
                .collect()
        }
        ScaleMode::Finite(c) => {
            if !(w0 > 0.0 && wdot0 > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "need w0 > 0 and wdot0 > 0, got {w0}, {wdot0}"
                )));
            }
            let cp = c.powf(p);
            let mut states = Vec::with_capacity(steps + 1);
            let (mut w, mut v) = (w0, wdot0);
            for k in 0..=steps {
                let t = time(k);
                states.push(ScaleState { t, w, wdot: v, alpha: v / w, beta: 0.0, eta: 0.0 });
                if k == steps {
                    break;
                }
                (w, v) = rk4_scale(p, cp, w, v, dt, t)?;
            }
            states
        }
    };
    let mut traj = ScaleTrajectory { mode, p, dt, n: None, eta_lower: t0, states };
    traj.fill_eta();
    Ok(traj)
}

fn closed_state(mode: ScaleMode, p: f64, t: f64) -> ScaleState {
    match mode {
        ScaleMode::Pheat => {
            let w = t.powf(1.0 / p);
            ScaleState { t, w, wdot: w / (p * t), alpha: 1.0 / (p * t), beta: 0.0, eta: t }
        }
        _ => ScaleState { t, w: t, wdot: 1.0, alpha: 1.0 / t, beta: 0.0, eta: t },
    }
}

fn rk4_scale(p: f64, cp: f64, w: f64, v: f64, dt: f64, t: f64) -> Result<(f64, f64)> {
    let rhs = |w: f64, v: f64| -> Result<(f64, f64)> {
        if !(w > 0.0) {
            return Err(Error::ScaleOde { t, reason: format!("w = {w} is not positive") });
        }
        if !(v > 0.0) {
            return Err(Error::ScaleOde { t, reason: format!("w' = {v} is not positive") });
        }
        Ok((v, wddot(p, cp, w, v)))
    };
    let k1 = rhs(w, v)?;
    let k2 = rhs(w + 0.5 * dt * k1.0, v + 0.5 * dt * k1.1)?;
    let k3 = rhs(w + 0.5 * dt * k2.0, v + 0.5 * dt * k2.1)?;
    let k4 = rhs(w + dt * k3.0, v + dt * k3.1)?;
    let w1 = w + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    let v1 = v + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    if !(w1 > 0.0 && v1 > 0.0 && w1.is_finite() && v1.is_finite()) {
        return Err(Error::ScaleOde {
            t: t + dt,
            reason: format!("left the region w > 0, w' > 0 (w = {w1}, w' = {v1})"),
        });
    }
    Ok((w1, v1))
}

/// Cumulative integral of samples `g` on a uniform grid: composite Simpson on
/// even prefixes, a 3/8 panel closing odd prefixes, and a derivative-corrected
/// trapezoid for the first interval. Fourth order throughout.
fn cumulative_integral(g: &[f64], dg: &[f64], dt: f64) -> Vec<f64> {
    let m = g.len();
    let mut out = vec![0.0; m];
    if m < 2 {
        return out;
    }
    out[1] = 0.5 * dt * (g[0] + g[1]) + dt * dt / 12.0 * (dg[0] - dg[1]);
    for k in 2..m {
        out[k] = if k % 2 == 0 {
            out[k - 2] + dt / 3.0 * (g[k - 2] + 4.0 * g[k - 1] + g[k])
        } else {
            out[k - 3] + 3.0 * dt / 8.0 * (g[k - 3] + 3.0 * g[k - 2] + 3.0 * g[k - 1] + g[k])
        };
    }
    out
}

/// First derivative of uniformly sampled `f` by five-point fourth-order stencils,
/// one-sided at the two nodes nearest each end.
fn derivative4(f: &[f64], dt: f64) -> Vec<f64> {
    let m = f.len();
    assert!(m >= 5, "need at least five samples");
    let s = 1.0 / (12.0 * dt);
    let mut d = vec![0.0; m];
    for k in 2..m - 2 {
        d[k] = (f[k - 2] - 8.0 * f[k - 1] + 8.0 * f[k + 1] - f[k + 2]) * s;
    }
    d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * s;
    d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * s;
    let e = m - 1;
    d[e] = (25.0 * f[e] - 48.0 * f[e - 1] + 36.0 * f[e - 2] - 16.0 * f[e - 3] + 3.0 * f[e - 4]) * s;
    d[e - 1] = (3.0 * f[e] + 10.0 * f[e - 1] - 18.0 * f[e - 2] + 6.0 * f[e - 3] - f[e - 4]) * s;
    d
}

fn hermite(t0: f64, t1: f64, f0: f64, f1: f64, d0: f64, d1: f64, t: f64) -> f64 {
    let h = t1 - t0;
    let s = (t - t0) / h;
    let (s2, s3) = (s * s, s * s * s);
    (2.0 * s3 - 3.0 * s2 + 1.0) * f0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * f1
        + (s3 - s2) * h * d1
}

impl ScaleTrajectory {
    pub fn mode(&self) -> ScaleMode {
        self.mode
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn states(&self) -> &[ScaleState] {
        &self.states
    }

    pub fn t_start(&self) -> f64 {
        self.states[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.states[self.states.len() - 1].t
    }

    pub fn eta_lower(&self) -> f64 {
        self.eta_lower
    }

    /// `(p-1)/c^p`, zero for the geodesic mode and infinite for the p-heat mode.
    pub fn damping_rate(&self) -> f64 {
        match self.mode {
            ScaleMode::Finite(c) => (self.p - 1.0) / c.powf(self.p),
            ScaleMode::Geodesic => 0.0,
            ScaleMode::Pheat => f64::INFINITY,
        }
    }

    /// Index of the node at `t`, if `t` is a node up to round-off.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let x = (t - self.t_start()) / self.dt;
        let k = x.round();
        if k < 0.0 || k as usize >= self.states.len() || (x - k).abs() > 1e-6 {
            return None;
        }
        Some(k as usize)
    }

    /// Recomputes eta with a different lower integration limit, which must be a node.
    pub fn with_eta_lower(mut self, lower: f64) -> Result<Self> {
        let k = self.node_index(lower).ok_or_else(|| {
            Error::InvalidParams(format!("eta lower limit {lower} is not a trajectory node"))
        })?;
        self.eta_lower = self.states[k].t;
        self.fill_eta();
        Ok(self)
    }

    fn fill_eta(&mut self) {
        let ScaleMode::Finite(_) = self.mode else {
            for s in &mut self.states {
                s.eta = s.t;
            }
            return;
        };
        let a = self.damping_rate();
        let t0 = self.t_start();
        let g: Vec<f64> = self
            .states
            .iter()
            .map(|s| (-a * (s.t - t0)).exp() / (s.w * s.w))
            .collect();
        let dg: Vec<f64> = self
            .states
            .iter()
            .zip(&g)
            .map(|(s, g)| -(2.0 * s.alpha + a) * g)
            .collect();
        let cum = cumulative_integral(&g, &dg, self.dt);
        let lower = self.node_index(self.eta_lower).expect("lower limit is a node");
        for (s, i) in self.states.iter_mut().zip(&cum) {
            s.eta = -s.w * s.w * (a * (s.t - t0)).exp() * (i - cum[lower]);
        }
    }

    /// Solves the beta equation for dimension `n` from `beta(t_start) = beta0`.
    pub fn with_beta(mut self, n: usize, beta0: f64) -> Result<Self> {
        let beta = solve_beta_ode(&self, n, beta0)?;
        for (s, b) in self.states.iter_mut().zip(beta) {
            s.beta = b;
        }
        self.n = Some(n);
        Ok(self)
    }

    fn beta_target(&self, w: f64) -> Result<f64> {
        let n = self.n.unwrap_or(0);
        if n == 0 {
            return Ok(0.0);
        }
        Ok(n as f64 * w.ln() - c_np(n, self.p)?.ln() - 1.0)
    }

    /// Derivatives of the scale variables at `s` implied by the governing equations.
    pub fn rates(&self, s: &ScaleState) -> ScaleRates {
        let p = self.p;
        match self.mode {
            ScaleMode::Geodesic => ScaleRates {
                wddot: 0.0,
                alphadot: -1.0 / (s.t * s.t),
                betadot: 0.0,
                etadot: 1.0,
            },
            ScaleMode::Pheat => ScaleRates {
                wddot: (1.0 / p - 1.0) * s.wdot / s.t,
                alphadot: -1.0 / (p * s.t * s.t),
                betadot: self.n.map_or(0.0, |n| n as f64 / (p * s.t)),
                etadot: 1.0,
            },
            ScaleMode::Finite(c) => {
                let cp = c.powf(p);
                let wdd = wddot(p, cp, s.w, s.wdot);
                let target = self.beta_target(s.w).unwrap_or(f64::NAN);
                ScaleRates {
                    wddot: wdd,
                    alphadot: wdd / s.w - s.alpha * s.alpha,
                    betadot: if self.n.is_some() { (target - s.beta) / cp } else { 0.0 },
                    etadot: s.eta * (2.0 * s.alpha + self.damping_rate()) - 1.0,
                }
            }
        }
    }

    /// State at an arbitrary `t` in range: exact on nodes, cubic Hermite between them.
    pub fn state_at(&self, t: f64) -> Result<ScaleState> {
        if let Some(k) = self.node_index(t) {
            let mut s = self.states[k];
            s.t = t;
            return Ok(s);
        }
        let (ta, tb) = (self.t_start(), self.t_end());
        if !(t >= ta && t <= tb) {
            return Err(Error::Window(format!(
                "t = {t} lies outside the scale trajectory [{ta}, {tb}]"
            )));
        }
        match self.mode {
            ScaleMode::Pheat => {
                let mut s = closed_state(self.mode, self.p, t);
                s.beta = self.beta_target(s.w)?;
                return Ok(s);
            }
            ScaleMode::Geodesic => {
                let mut s = closed_state(self.mode, self.p, t);
                s.beta = self.states[0].beta;
                return Ok(s);
            }
            ScaleMode::Finite(_) => {}
        }
        let k = (((t - ta) / self.dt).floor() as usize).min(self.states.len() - 2);
        let (a, b) = (&self.states[k], &self.states[k + 1]);
        let (ra, rb) = (self.rates(a), self.rates(b));
        let w = hermite(a.t, b.t, a.w, b.w, a.wdot, b.wdot, t);
        let wdot = hermite(a.t, b.t, a.wdot, b.wdot, ra.wddot, rb.wddot, t);
        Ok(ScaleState {
            t,
            w,
            wdot,
            alpha: wdot / w,
            beta: hermite(a.t, b.t, a.beta, b.beta, ra.betadot, rb.betadot, t),
            eta: hermite(a.t, b.t, a.eta, b.eta, ra.etadot, rb.etadot, t),
        })
    }

    /// Residuals of the scale, Riccati and eta equations at every node.
    pub fn residuals(&self) -> Vec<ScaleResiduals> {
        let p = self.p;
        let q = conj(p);
        let col = |f: fn(&ScaleState) -> f64| self.states.iter().map(f).collect::<Vec<_>>();
        let wdd = derivative4(&col(|s| s.wdot), self.dt);
        let ad = derivative4(&col(|s| s.alpha), self.dt);
        let ed = derivative4(&col(|s| s.eta), self.dt);
        let a = self.damping_rate();
        self.states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let riccati_src = (p - 1.0) / p.powf(q - 1.0) * s.alpha.powf(2.0 - q) / s.w.powf(q);
                match self.mode {
                    ScaleMode::Geodesic => ScaleResiduals {
                        pode: wdd[k],
                        alphaeq: ad[k] + s.alpha * s.alpha,
                        eta: 1.0 + ed[k] - 2.0 * s.alpha * s.eta,
                    },
                    ScaleMode::Pheat => ScaleResiduals {
                        pode: (p - 1.0) * s.wdot - source(p, s.w, s.wdot),
                        alphaeq: (p - 1.0) * s.alpha - riccati_src,
                        eta: f64::NAN,
                    },
                    ScaleMode::Finite(c) => {
                        let cp = c.powf(p);
                        ScaleResiduals {
                            pode: cp * wdd[k] + (p - 1.0) * s.wdot - source(p, s.w, s.wdot),
                            alphaeq: cp * (ad[k] + s.alpha * s.alpha) + (p - 1.0) * s.alpha
                                - riccati_src,
                            eta: 1.0 + ed[k] - s.eta * (2.0 * s.alpha + a),
                        }
                    }
                }
            })
            .collect()
    }
}

/// Solves `c^p beta' + beta = n log w - log c_{n,p} - 1` along `traj` from `beta0`.
///
/// RK4 with `w` at half steps from cubic Hermite interpolation of `(w, w')`.
pub fn solve_beta_ode(traj: &ScaleTrajectory, n: usize, beta0: f64) -> Result<Vec<f64>> {
    let cn = c_np(n, traj.p)?.ln();
    let target = |w: f64| n as f64 * w.ln() - cn - 1.0;
    let states = &traj.states;
    match traj.mode {
        ScaleMode::Geodesic => Ok(vec![beta0; states.len()]),
        ScaleMode::Pheat => Ok(states.iter().map(|s| target(s.w)).collect()),
        ScaleMode::Finite(c) => {
            let cp = c.powf(traj.p);
            let f = |w: f64, b: f64| (target(w) - b) / cp;
            let mut out = Vec::with_capacity(states.len());
            let mut b = beta0;
            out.push(b);
            for pair in states.windows(2) {
                let (s0, s1) = (&pair[0], &pair[1]);
                let h = s1.t - s0.t;
                let wm = hermite(s0.t, s1.t, s0.w, s1.w, s0.wdot, s1.wdot, s0.t + 0.5 * h);
                let k1 = f(s0.w, b);
                let k2 = f(wm, b + 0.5 * h * k1);
                let k3 = f(wm, b + 0.5 * h * k2);
                let k4 = f(s1.w, b + h * k3);
                b += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                out.push(b);
            }
            Ok(out)
        }
    }
}

/// `eta(t)` with lower integration limit `t_lower`; both must be trajectory nodes.
pub fn eta_weight(traj: &ScaleTrajectory, t_lower: f64, t: f64) -> Result<f64> {
    if t < t_lower {
        return Err(Error::InvalidParams(format!(
            "eta needs t >= lower limit, got t = {t} < {t_lower}"
        )));
    }
    let k = traj
        .node_index(t)
        .ok_or_else(|| Error::Window(format!("t = {t} is not a scale-trajectory node")))?;
    if (traj.eta_lower - t_lower).abs() <= 1e-12 * (1.0 + t_lower.abs()) {
        return Ok(traj.states[k].eta);
    }
    Ok(traj.clone().with_eta_lower(t_lower)?.states[k].eta)
}
