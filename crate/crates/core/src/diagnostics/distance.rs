//! One-dimensional `L^q`-Wasserstein distance by monotone rearrangement.

use crate::error::{Error, Result};
use crate::fields::ScalarField;

/// Default number of quantile samples.
pub const CDF_SAMPLES: usize = 4096;
const MASS_TOLERANCE: f64 = 1e-6;

/// Cell edges and cumulative masses of a 1D density (piecewise-constant per cell).
fn cdf(rho: &ScalarField) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = rho.grid();
    if g.dim() != 1 {
        return Err(Error::ShapeMismatch("the distance oracle is one-dimensional".into()));
    }
    if rho.values().iter().any(|&r| r < 0.0) {
        return Err(Error::InvalidParams("density must be non-negative".into()));
    }
    let h = g.spacing(0);
    let first_edge = if g.is_periodic() { g.coord(0, 0) - 0.5 * h } else { g.lo()[0] };
    let mut edges = Vec::with_capacity(g.len() + 1);
    let mut cum = Vec::with_capacity(g.len() + 1);
    edges.push(first_edge);
    cum.push(0.0);
    for (i, r) in rho.values().iter().enumerate() {
        edges.push(first_edge + (i + 1) as f64 * h);
        cum.push(cum[i] + r * h);
    }
    let mass = cum[cum.len() - 1];
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::InvalidParams(format!("density has mass {mass}, expected 1")));
    }
    cum.iter_mut().for_each(|c| *c /= mass);
    Ok((edges, cum))
}

/// Inverse of the piecewise-linear CDF at level `s`.
fn quantile(edges: &[f64], cum: &[f64], s: f64) -> f64 {
    // first index with cum > s
    let j = cum.partition_point(|&c| c <= s).clamp(1, cum.len() - 1);
    let (c0, c1) = (cum[j - 1], cum[j]);
    if c1 <= c0 {
        return edges[j - 1];
    }
    edges[j - 1] + (s - c0) / (c1 - c0) * (edges[j] - edges[j - 1])
}

/// `W_q(rho0, rho1) = (int_0^1 |F0^{-1}(s) - F1^{-1}(s)|^q ds)^{1/q}` by the
/// midpoint rule on `samples` quantile levels.
pub fn wq_distance_1d(rho0: &ScalarField, rho1: &ScalarField, q: f64, samples: usize) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidParams(format!("need q >= 1, got {q}")));
    }
    if samples == 0 {
        return Err(Error::InvalidParams("need at least one quantile sample".into()));
    }
    let (e0, c0) = cdf(rho0)?;
    let (e1, c1) = cdf(rho1)?;
    let ds = 1.0 / samples as f64;
    let sum: f64 = (0..samples)
        .map(|i| {
            let s = (i as f64 + 0.5) * ds;
            (quantile(&e0, &c0, s) - quantile(&e1, &c1, s)).abs().powf(q)
        })
        .sum();
    Ok((sum * ds).powf(1.0 / q))
}
