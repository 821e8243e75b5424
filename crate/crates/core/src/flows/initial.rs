//! Initial data: self-similar profiles on a box and seeded smooth
//! perturbations on a torus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FlowState, Regime};
use crate::closedform::{special_langevin, ScaleState};
use crate::error::{Error, Result};
use crate::fields::{gradient, quadrature, GridSpec, ModelParams, ScalarField, VectorField};

/// Real trigonometric polynomial `sum a cos(k.theta) + b sin(k.theta)`,
/// `theta_i = 2 pi (x_i - lo_i) / L_i`.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    terms: Vec<([f64; 2], f64, f64)>,
    lo: [f64; 2],
    scale: [f64; 2],
}

impl TrigPoly {
    /// Random low-frequency polynomial with wavenumbers up to 2 per axis and
    /// coefficients uniform in `[-amplitude, amplitude] / |k|^2`.
    pub fn random(grid: &GridSpec, rng: &mut ChaCha8Rng, amplitude: f64) -> Self {
        let mut lo = [0.0; 2];
        let mut scale = [0.0; 2];
        for a in 0..grid.dim() {
            lo[a] = grid.lo()[a];
            scale[a] = std::f64::consts::TAU / (grid.hi()[a] - grid.lo()[a]);
        }
        let modes: Vec<[f64; 2]> = if grid.dim() == 1 {
            vec![[1.0, 0.0], [2.0, 0.0]]
        } else {
            let mut m = Vec::new();
            for k1 in 0..=2i32 {
                for k2 in -2..=2i32 {
                    if k1 > 0 || k2 > 0 {
                        m.push([k1 as f64, k2 as f64]);
                    }
                }
            }
            m
        };
        let terms = modes
            .into_iter()
            .map(|k| {
                let norm = k[0] * k[0] + k[1] * k[1];
                let a = amplitude * rng.random_range(-1.0..1.0) / norm;
                let b = amplitude * rng.random_range(-1.0..1.0) / norm;
                (k, a, b)
            })
            .collect();
        Self { terms, lo, scale }
    }

    fn phase(&self, k: &[f64; 2], x: &[f64]) -> f64 {
        x.iter()
            .enumerate()
            .map(|(i, xi)| k[i] * self.scale[i] * (xi - self.lo[i]))
            .sum()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, a, b)| {
                let th = self.phase(k, x);
                a * th.cos() + b * th.sin()
            })
            .sum()
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (k, a, b) in &self.terms {
            let th = self.phase(k, x);
            let d = -a * th.sin() + b * th.cos();
            for (i, o) in out.iter_mut().enumerate() {
                *o += d * k[i] * self.scale[i];
            }
        }
    }

    /// Divergence-free field `(-d_2 f, d_1 f)`.
    pub fn skew_gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut g = [0.0; 2];
        self.gradient(x, &mut g[..x.len()]);
        out[0] = -g[1];
        out[1] = g[0];
    }
}

fn normalised_logrho(f: ScalarField) -> ScalarField {
    let mass = quadrature(&f.map(f64::exp), None);
    let shift = mass.ln();
    f.map(|v| v - shift)
}

/// Slaves `phi = -log rho - 1` and `u = grad phi` for the p-heat regime.
pub(crate) fn slave_pheat(logrho: ScalarField, t: f64) -> FlowState {
    let phi = logrho.map(|x| -x - 1.0);
    FlowState {
        t,
        u: gradient(&phi),
        phi,
        logrho,
        regime: Regime::Pheat,
    }
}

/// Self-similar profile with scale `scale` on a box; `u` is the exact gradient
/// `alpha^{q-1} |x|^{q-2} x` sampled at the nodes.
pub fn special_state(
    regime: Regime,
    params: &ModelParams,
    grid: &GridSpec,
    scale: &ScaleState,
) -> Result<FlowState> {
    let sf = special_langevin(params.dim(), params.p(), scale, grid)?;
    if regime == Regime::Pheat {
        return Ok(slave_pheat(sf.logrho, scale.t));
    }
    let q = params.q();
    let coeff = scale.alpha.powf(q - 1.0);
    let u = VectorField::from_fn(*grid, |x, out| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let f = if r > 0.0 { coeff * r.powf(q - 2.0) } else { 0.0 };
        for (o, xi) in out.iter_mut().zip(x) {
            *o = f * xi;
        }
    });
    Ok(FlowState { t: scale.t, logrho: sf.logrho, u, phi: sf.phi, regime })
}

fn require_torus(grid: &GridSpec) -> Result<()> {
    if !grid.is_periodic() {
        return Err(Error::Topology("perturbed initial data needs a periodic grid".into()));
    }
    Ok(())
}

/// `rho ~ exp(f)` and `phi = g` for seeded random trigonometric polynomials `f, g`.
pub fn perturbed_state(
    regime: Regime,
    grid: &GridSpec,
    t0: f64,
    seed: u64,
    amplitude: f64,
) -> Result<FlowState> {
    require_torus(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = TrigPoly::random(grid, &mut rng, amplitude);
    let g = TrigPoly::random(grid, &mut rng, amplitude);
    let logrho = normalised_logrho(ScalarField::from_fn(*grid, |x| f.value(x)));
    if regime == Regime::Pheat {
        return Ok(slave_pheat(logrho, t0));
    }
    Ok(FlowState {
        t: t0,
        logrho,
        u: VectorField::from_fn(*grid, |x, o| g.gradient(x, o)),
        phi: ScalarField::from_fn(*grid, |x| g.value(x)),
        regime,
    })
}

/// Perturbed data whose velocity also carries a divergence-free part of relative size `swirl`.
pub fn rotational_state(
    regime: Regime,
    grid: &GridSpec,
    t0: f64,
    seed: u64,
    amplitude: f64,
    swirl: f64,
) -> Result<FlowState> {
    if grid.dim() != 2 {
        return Err(Error::InvalidParams("rotational initial data needs n = 2".into()));
    }
    if regime == Regime::Pheat {
        return Err(Error::InvalidParams(
            "the p-heat regime slaves u to the density; no rotational data".into(),
        ));
    }
    let mut state = perturbed_state(regime, grid, t0, seed, amplitude)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let psi = TrigPoly::random(grid, &mut rng, swirl);
    let rot = VectorField::from_fn(*grid, |x, o| psi.skew_gradient(x, o));
    for (c, r) in state.u.components_mut().iter_mut().zip(rot.components()) {
        for (a, b) in c.iter_mut().zip(r) {
            *a += b;
        }
    }
    Ok(state)
}

/// User-supplied density and potential; `u` is the discrete gradient of `phi`.
pub fn user_state(regime: Regime, rho: &ScalarField, phi: &ScalarField, t0: f64) -> Result<FlowState> {
    if rho.grid() != phi.grid() {
        return Err(Error::ShapeMismatch("density and potential grids differ".into()));
    }
    if rho.values().iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParams("initial density must be positive".into()));
    }
    let logrho = rho.map(f64::ln);
    if regime == Regime::Pheat {
        return Ok(slave_pheat(logrho, t0));
    }
    Ok(FlowState { t: t0, logrho, u: gradient(phi), phi: phi.clone(), regime })
}
