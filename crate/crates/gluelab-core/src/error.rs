//! Crate-wide error taxonomy.
//!
//! Every failure carries a coarse [`ErrorCategory`] so that batch drivers can
//! map errors to exit codes (bad input vs. numerical breakdown) without
//! matching on message strings.

use thiserror::Error;

/// Coarse classification of a failure, used by callers to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorCategory {
    /// The request itself is ill-posed: out-of-domain points, invalid
    /// parameters, inconsistent meshes, unreadable inputs.
    Validation,
    /// The request was well-posed but a numerical process failed: a solver
    /// stalled, an iteration diverged, a root was not bracketed.
    Numerical,
}

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// A point left the valid domain of a coordinate chart.
    #[error("point outside chart domain: {0}")]
    ChartDomain(String),

    /// A vector that must be unit length (in the ambient metric) is not.
    #[error("vector is not unit length: |v| = {norm:.6e}")]
    NonUnitVector { norm: f64 },

    /// A tangent vector to the sphere is not orthogonal to its base point.
    #[error("vector not tangent to the sphere at its base: <p,v> = {dot:.6e}")]
    NonTangent { dot: f64 },

    /// A geodesic was requested past the injectivity bound of the space.
    #[error("geodesic length {len:.6e} exceeds injectivity bound {bound:.6e}")]
    InjectivityExceeded { len: f64, bound: f64 },

    /// An invalid or inconsistent parameter value.
    #[error("invalid parameter: {0}")]
    BadParameter(String),

    /// Mesh connectivity is not an oriented manifold-with-boundary.
    #[error("mesh is not an oriented manifold: {0}")]
    NonManifold(String),

    /// A mesh element degenerated (zero area, collapsed edge, flipped face).
    #[error("degenerate mesh element: {0}")]
    DegenerateMesh(String),

    /// A linear solve failed to reach the requested residual.
    #[error("linear solve failed: {0}")]
    SolveFailed(String),

    /// The iterative eigensolver did not converge.
    #[error("eigensolver did not converge after {iters} iterations (residual {residual:.3e})")]
    EigenNoConverge { iters: usize, residual: f64 },

    /// A nonlinear iteration diverged or stalled.
    #[error("iteration diverged: {0}")]
    Diverged(String),

    /// Root finding failed (no bracket, or tolerance not reached).
    #[error("root finding failed: {0}")]
    RootFind(String),

    /// Underlying I/O failure while reading or writing artifacts.
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// The coarse category of this error (drives process exit codes).
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::SolveFailed(_)
            | Error::EigenNoConverge { .. }
            | Error::Diverged(_)
            | Error::RootFind(_) => ErrorCategory::Numerical,
            _ => ErrorCategory::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
