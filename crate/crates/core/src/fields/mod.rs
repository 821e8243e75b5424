//! Flat computational domains and the fields that live on them.
//!
//! A [`GridSpec`] is either a periodic torus or a truncated box in one or two
//! dimensions. Periodic grids place nodes at `lo + i*h`; box grids are cell
//! centred (`lo + (i + 1/2)*h`) so that a symmetric box never has a node at
//! the origin. Fields store one `f64` per node in row-major order (axis 0
//! varies slowest).

mod anisotropy;
pub(crate) mod calculus;
pub mod snapshot;

pub use anisotropy::{
    a_inner, a_norm2, anisotropy, bochner_residual, linearized_p_laplacian, p_laplacian, regularized_speed,
};
pub use calculus::{curl2d, divergence, gradient, hessian, quadrature};

use crate::error::{Error, Result};

/// Minimum number of nodes per axis.
pub const MIN_POINTS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Periodic,
    Box,
}

impl Topology {
    pub fn tag(self) -> char {
        match self {
            Topology::Periodic => 'p',
            Topology::Box => 'b',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    dim: usize,
    lo: [f64; 2],
    hi: [f64; 2],
    points: [usize; 2],
    topology: Topology,
}

impl GridSpec {
    pub fn new(lo: &[f64], hi: &[f64], points: &[usize], topology: Topology) -> Result<Self> {
        let dim = points.len();
        if !(1..=2).contains(&dim) || lo.len() != dim || hi.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2 with matching lo/hi/N (got N={points:?}, lo={lo:?}, hi={hi:?})"
            )));
        }
        let mut g = GridSpec {
            dim,
            lo: [0.0; 2],
            hi: [1.0; 2],
            points: [1; 2],
            topology,
        };
        for a in 0..dim {
            if points[a] < MIN_POINTS {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} points, need at least {MIN_POINTS}",
                    points[a]
                )));
            }
            if !(lo[a].is_finite() && hi[a].is_finite() && hi[a] > lo[a]) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} extent [{}, {}] is empty or non-finite",
                    lo[a], hi[a]
                )));
            }
            g.lo[a] = lo[a];
            g.hi[a] = hi[a];
            g.points[a] = points[a];
        }
        Ok(g)
    }

    pub fn periodic_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&[lo], &[hi], &[n], Topology::Periodic)
    }

    pub fn box_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::new(&[lo], &[hi], &[n], Topology::Box)
    }

    /// Square grid `[lo, hi]^dim` with `n` points per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, n: usize, topology: Topology) -> Result<Self> {
        Self::new(&vec![lo; dim], &vec![hi; dim], &vec![n; dim], topology)
    }

    /// Same domain with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Self {
        let mut g = *self;
        for a in 0..self.dim {
            g.points[a] *= factor;
        }
        g
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    pub fn points(&self) -> &[usize] {
        &self.points[..self.dim]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.points[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Volume element `h_1 * ... * h_n`.
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    pub fn domain_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn len(&self) -> usize {
        self.points[..self.dim].iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Distance in nodes between neighbours along `axis`.
    pub(crate) fn stride(&self, axis: usize) -> usize {
        if self.dim == 2 && axis == 0 {
            self.points[1]
        } else {
            1
        }
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        match self.topology {
            Topology::Periodic => self.lo[axis] + i as f64 * h,
            Topology::Box => self.lo[axis] + (i as f64 + 0.5) * h,
        }
    }

    /// Multi-index of a flat node index.
    pub fn multi_index(&self, node: usize) -> [usize; 2] {
        if self.dim == 1 {
            [node, 0]
        } else {
            [node / self.points[1], node % self.points[1]]
        }
    }

    pub fn node_position(&self, node: usize) -> [f64; 2] {
        let idx = self.multi_index(node);
        let mut x = [0.0; 2];
        for (a, xa) in x.iter_mut().enumerate().take(self.dim) {
            *xa = self.coord(a, idx[a]);
        }
        x
    }

    /// Smallest number of nodes between `node` and a box face; `usize::MAX` on a torus.
    pub fn boundary_distance(&self, node: usize) -> usize {
        if self.is_periodic() {
            return usize::MAX;
        }
        let idx = self.multi_index(node);
        (0..self.dim)
            .map(|a| idx[a].min(self.points[a] - 1 - idx[a]))
            .min()
            .unwrap_or(usize::MAX)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn from_vec(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("value at node {i} is {}", values[i])));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn constant(grid: GridSpec, value: f64) -> Self {
        Self::from_raw(grid, vec![value; grid.len()])
    }

    /// Samples `f(x)` at every node; `x` has `grid.dim()` entries.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let x = grid.node_position(k);
                f(&x[..grid.dim()])
            })
            .collect();
        Self::from_raw(grid, values)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Self {
        debug_assert_eq!(self.grid, other.grid);
        Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `n` components per node, stored component-major.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn from_components(grid: GridSpec, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::ShapeMismatch(format!(
                "vector field needs {} components of {} values",
                grid.dim(),
                grid.len()
            )));
        }
        if comps.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("vector field component".into()));
        }
        Ok(Self { grid, comps })
    }

    pub(crate) fn from_raw(grid: GridSpec, comps: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(comps.len(), grid.dim());
        Self { grid, comps }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_raw(grid, vec![vec![0.0; grid.len()]; grid.dim()])
    }

    /// Samples a vector-valued function; `f` writes `grid.dim()` components.
    pub fn from_fn(grid: GridSpec, f: impl Fn(&[f64], &mut [f64])) -> Self {
        let dim = grid.dim();
        let mut comps = vec![vec![0.0; grid.len()]; dim];
        let mut out = [0.0; 2];
        for k in 0..grid.len() {
            let x = grid.node_position(k);
            f(&x[..dim], &mut out[..dim]);
            for a in 0..dim {
                comps[a][k] = out[a];
            }
        }
        Self::from_raw(grid, comps)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    pub fn at(&self, node: usize) -> [f64; 2] {
        let mut v = [0.0; 2];
        for (a, c) in self.comps.iter().enumerate() {
            v[a] = c[node];
        }
        v
    }

    /// Pointwise squared Euclidean norm.
    pub fn norm_sq(&self) -> ScalarField {
        let vals = (0..self.grid.len())
            .map(|k| self.comps.iter().map(|c| c[k] * c[k]).sum())
            .collect();
        ScalarField::from_raw(self.grid, vals)
    }

    /// Pointwise product with a scalar field.
    pub fn scaled_by(&self, s: &ScalarField) -> VectorField {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(s.values()).map(|(a, b)| a * b).collect())
            .collect();
        VectorField::from_raw(self.grid, comps)
    }

    /// Pointwise Euclidean inner product.
    pub fn dot(&self, other: &VectorField) -> ScalarField {
        let vals = (0..self.grid.len())
            .map(|k| self.comps.iter().zip(&other.comps).map(|(a, b)| a[k] * b[k]).sum())
            .collect();
        ScalarField::from_raw(self.grid, vals)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }

    /// Max over nodes of the Euclidean norm.
    pub fn max_norm(&self) -> f64 {
        self.norm_sq().values().iter().fold(0.0_f64, |m, v| m.max(*v)).sqrt()
    }
}

/// An `n x n` matrix per node; entry `(i, j)` is component `i*n + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorField {
    grid: GridSpec,
    comps: Vec<Vec<f64>>,
}

impl TensorField {
    pub(crate) fn from_raw(grid: GridSpec, comps: Vec<Vec<f64>>) -> Self {
        debug_assert_eq!(comps.len(), grid.dim() * grid.dim());
        Self { grid, comps }
    }

    /// The same matrix at every node, given row-major.
    pub fn uniform(grid: GridSpec, matrix: &[f64]) -> Result<Self> {
        let n = grid.dim();
        if matrix.len() != n * n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} matrix entries, got {}",
                n * n,
                matrix.len()
            )));
        }
        Ok(Self::from_raw(
            grid,
            matrix.iter().map(|&m| vec![m; grid.len()]).collect(),
        ))
    }

    pub fn identity(grid: GridSpec) -> Self {
        let n = grid.dim();
        let eye: Vec<f64> = (0..n * n).map(|c| if c / n == c % n { 1.0 } else { 0.0 }).collect();
        Self::uniform(grid, &eye).expect("identity has matching shape")
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[i * self.grid.dim() + j]
    }

    /// Row-major `n x n` block at one node (unused entries are zero in 1D).
    pub fn at(&self, node: usize) -> [[f64; 2]; 2] {
        let n = self.grid.dim();
        let mut m = [[0.0; 2]; 2];
        for i in 0..n {
            for j in 0..n {
                m[i][j] = self.comps[i * n + j][node];
            }
        }
        m
    }

    /// Pointwise `self - s * other`.
    pub fn sub_scaled(&self, s: &ScalarField, other: &TensorField) -> TensorField {
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .zip(s.values())
                    .map(|((x, y), w)| x - w * y)
                    .collect()
            })
            .collect();
        TensorField::from_raw(self.grid, comps)
    }

    /// Pointwise product with a scalar field.
    pub fn scaled_by(&self, s: &ScalarField) -> TensorField {
        let comps = self
            .comps
            .iter()
            .map(|c| c.iter().zip(s.values()).map(|(a, b)| a * b).collect())
            .collect();
        TensorField::from_raw(self.grid, comps)
    }

    /// Pointwise `sum_i T_ii`.
    pub fn trace(&self) -> ScalarField {
        let n = self.grid.dim();
        let vals = (0..self.grid.len())
            .map(|k| (0..n).map(|i| self.comps[i * n + i][k]).sum())
            .collect();
        ScalarField::from_raw(self.grid, vals)
    }

    /// Pointwise matrix product `self * other`.
    pub fn matmul(&self, other: &TensorField) -> TensorField {
        let n = self.grid.dim();
        let mut comps = vec![vec![0.0; self.grid.len()]; n * n];
        for i in 0..n {
            for j in 0..n {
                let out = &mut comps[i * n + j];
                for l in 0..n {
                    let a = &self.comps[i * n + l];
                    let b = &other.comps[l * n + j];
                    for k in 0..out.len() {
                        out[k] += a[k] * b[k];
                    }
                }
            }
        }
        TensorField::from_raw(self.grid, comps)
    }

    /// Max over nodes and entries of `|T_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().flatten().all(|v| v.is_finite())
    }
}

/// Exponent `p`, its conjugate `q`, Langevin coupling `c` and regulariser `eps`.
///
/// `c = 0` selects the p-heat limit and `c = inf` the geodesic limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    p: f64,
    q: f64,
    c: f64,
    eps: f64,
    dim: usize,
}

impl ModelParams {
    pub const DEFAULT_EPS: f64 = 1e-8;

    pub fn new(p: f64, c: f64, eps: f64, dim: usize) -> Result<Self> {
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::InvalidParams(format!("p must be finite and > 1, got {p}")));
        }
        if c.is_nan() || c < 0.0 {
            return Err(Error::InvalidParams(format!("c must lie in [0, inf], got {c}")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidParams(format!("eps must be finite and >= 0, got {eps}")));
        }
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidParams(format!("dimension must be 1 or 2, got {dim}")));
        }
        Ok(Self {
            p,
            q: p / (p - 1.0),
            c,
            eps,
            dim,
        })
    }

    /// Geodesic-flow parameters (`c = inf`).
    pub fn geodesic(p: f64, dim: usize) -> Result<Self> {
        Self::new(p, f64::INFINITY, Self::DEFAULT_EPS, dim)
    }

    pub fn with_c(self, c: f64) -> Result<Self> {
        Self::new(self.p, c, self.eps, self.dim)
    }

    pub fn with_eps(self, eps: f64) -> Result<Self> {
        Self::new(self.p, self.c, eps, self.dim)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `c^p`, infinite in the geodesic limit.
    pub fn c_pow_p(&self) -> f64 {
        self.c.powf(self.p)
    }

    /// `c^{-p}`, zero in the geodesic limit.
    pub fn inv_c_pow_p(&self) -> f64 {
        if self.c.is_infinite() {
            0.0
        } else {
            1.0 / self.c_pow_p()
        }
    }
}
