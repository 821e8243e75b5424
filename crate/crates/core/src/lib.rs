//! Numerical laboratory for flows on the L^q-Wasserstein space over flat
//! domains: the L^q-geodesic flow, the Langevin deformation (compressible
//! p-Euler with damping) and the p-Laplacian heat flow, together with the
//! entropy functionals whose identities are checked along simulated
//! trajectories.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod closedform;
pub mod config;
pub mod diagnostics;
mod error;
pub mod fields;
pub mod flows;
pub mod verify;

pub use error::{Error, Result};
