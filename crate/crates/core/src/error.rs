//! Error type shared across the library.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Which mesh invariant a violation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantKind {
    /// A simplex is claimed by two cells of the same dimension, a boundary
    /// chain leaks outside the declared boundary cells, or a cell's boundary
    /// does not tile with unit coefficients.
    Conformity,
    /// Member simplices of a cell disagree on orientation, or declared
    /// boundary signs contradict the signs computed from simplicial chains.
    Orientation,
    /// The integer composition of two consecutive boundary maps is nonzero.
    BoundaryOfBoundary,
    /// A cell's simplicial submesh does not have the reduced homology of a
    /// ball.
    BallHomology,
    /// A simplex is interior to zero or to several cells.
    Selection,
    /// A simplex or cell has (numerically) zero measure or a degenerate
    /// vertex configuration.
    Degenerate,
    /// A reference (vertex, simplex or cell id) points outside the mesh.
    Reference,
}

impl std::fmt::Display for InvariantKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            InvariantKind::Conformity => "conformity",
            InvariantKind::Orientation => "orientation",
            InvariantKind::BoundaryOfBoundary => "boundary-of-boundary",
            InvariantKind::BallHomology => "ball-homology",
            InvariantKind::Selection => "selection",
            InvariantKind::Degenerate => "degenerate",
            InvariantKind::Reference => "reference",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid degree: {0}")]
    InvalidDegree(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mesh parse error: {0}")]
    Parse(String),

    #[error("mesh invariant violated [{kind}]: {detail}")]
    Invariant { kind: InvariantKind, detail: String },

    #[error("ill-conditioned basis: {0}")]
    IllConditioned(String),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("chain is not a boundary (residual {residual:.3e})")]
    NotABoundary { residual: f64 },

    #[error("cochain is not a coboundary (residual {residual:.3e})")]
    NotACoboundary { residual: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invariant(kind: InvariantKind, detail: impl Into<String>) -> Self {
        Error::Invariant { kind, detail: detail.into() }
    }
}
