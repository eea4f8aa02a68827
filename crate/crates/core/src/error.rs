//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model validation, transformation, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    /// Shapes or dimension fields are inconsistent.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A standing assumption on the game data fails at some time.
    #[error("assumption {name} fails at t = {t}: {detail}")]
    Assumption {
        /// Assumption label, e.g. "A1".
        name: &'static str,
        /// Time of the worst violation.
        t: f64,
        /// Offending eigenvalue / determinant / rank information.
        detail: String,
    },

    /// The supplied or constructed complement makes (B_c, B_v) singular.
    #[error("invalid complement: (B_c, B_v) is singular at t = {t} (det = {det:e})")]
    InvalidComplement {
        /// Time of degeneracy.
        t: f64,
        /// Determinant at that time.
        det: f64,
    },

    /// Invalid scalar parameter (ε, weights, tolerances).
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The shooting system is singular: the BVP has no unique solution.
    #[error("boundary-value problem unsolvable or non-unique: {0}")]
    Unsolvable(String),

    /// Residuals stayed above tolerance after maximum refinement.
    #[error("convergence failure: achieved residual {achieved:e} > tol {tol:e}")]
    Convergence {
        /// Best residual reached.
        achieved: f64,
        /// Requested tolerance.
        tol: f64,
    },

    /// A configuration the solver deliberately does not support.
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// Failure parsing a game-spec document.
    #[error("game spec parse error: {0}")]
    Parse(String),

    /// Internal cross-checks disagree (two routes to one number diverge).
    #[error("internal consistency failure: {0}")]
    Inconsistency(String),
}
