//! Discrete de Rham (DDR) complexes of arbitrary-order polynomial differential
//! forms on polytopal meshes.
//!
//! The library is organized bottom-up:
//!
//! - [`exterior`]: alternators (wedge basis index tuples), wedge signs, Hodge
//!   star on orthonormal frames.
//! - [`polyform`]: polynomial differential forms on a framed cell, with exact
//!   integration, exterior derivative, Koszul contraction, traces, trimmed
//!   polynomial spaces and local operator-norm measurements.
//! - [`mesh`]: polytopal meshes with a conforming simplicial submesh. All
//!   geometry lives on simplices; cells are combinatorial aggregates with an
//!   orthonormal frame, a star point and a diameter.
//! - [`meshgen`]: deterministic mesh families and fixtures.
//! - [`topology`]: chains/cochains, signed incidence, cycle spaces, and the
//!   spanning-set construction used by the cochain lift.
//! - [`whitney`]: Whitney forms on the simplicial submesh, the associated
//!   interpolation/de Rham maps and minimal-norm coboundary preimages.
//! - [`lift`]: the polytopal-to-simplicial cochain lift, its left inverse, and
//!   the cochain-level Poincaré construction.
//! - [`ddr`]: the discrete complex itself — component spaces, interpolation,
//!   discrete exterior derivative, potential reconstructions and norms.
//! - [`poincare`]: constructive liftings of discrete coboundaries, spectral
//!   Poincaré constants, and refinement sweeps.

pub mod ddr;
pub mod error;
pub mod exterior;
pub mod lift;
pub mod linalg;
pub mod mesh;
pub mod meshgen;
pub mod poincare;
pub mod polyform;
pub mod topology;
pub mod whitney;

pub use error::{Error, Result};

/// Default RNG seed used across the toolkit when none is supplied.
pub const DEFAULT_SEED: u64 = 42;

/// Relative rank cutoff: singular values below `RANK_TOL` times the largest
/// are treated as zero.
pub const RANK_TOL: f64 = 1e-10;
