//! Crate-wide error type.
//!
//! Everything fallible returns [`Error`]. The CLI maps errors onto process
//! exit codes: configuration and domain violations are *validation* failures
//! (exit 2), while a run that had to give up because too many trajectories
//! left the numerically safe region is a *numeric abort* (exit 3).

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter failed validation before any computation started.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A Verblunsky coefficient left the open unit disk.
    #[error("coefficient modulus {modulus} is outside the open unit disk")]
    CoefficientOutsideDisk { modulus: f64 },

    /// The terminal coefficient of a finite CMV matrix must lie on the unit circle.
    #[error("terminal coefficient modulus {modulus} is not 1 (must be unimodular)")]
    WrongTerminalModulus { modulus: f64 },

    /// Operation requires a sequence sampled under a specific measure.
    #[error("operation requires a {expected} sequence, got {found}")]
    MeasureMismatch {
        expected: &'static str,
        found: String,
    },

    /// The requested kernel moment does not exist for this coefficient index.
    #[error(
        "divergent moment: exponent {exponent} requires exponent < {bound} \
         at coefficient index {index}"
    )]
    DivergentMoment {
        exponent: f64,
        bound: f64,
        index: usize,
    },

    /// `solve_xr` ran past the stored norm ladder without bracketing a root.
    #[error("ladder exhausted: norms up to x = {x_max} never reach the target")]
    LadderExhausted { x_max: f64 },

    /// Slope regression needs at least two checkpoints.
    #[error("need at least 2 slope checkpoints, got {found}")]
    NotEnoughCheckpoints { found: usize },

    /// A single trajectory wandered too close to the unit circle to continue.
    ///
    /// The Poisson kernel blows up at modulus 1; ensemble drivers count
    /// these aborts instead of propagating NaNs.
    #[error("coefficient modulus {modulus} at step {step} breaches the numeric guard")]
    TrajectoryAbort { modulus: f64, step: usize },

    /// Guard against heavy-tailed Monte Carlo means at large depth.
    #[error(
        "martingale check at depth {n_max} refused (variance grows too fast); \
         depths above {limit} need an explicit override"
    )]
    DepthRefused { n_max: usize, limit: usize },

    /// Too many trajectories hit the numeric abort guard.
    #[error("numeric abort threshold exceeded: {aborted} of {trials} trajectories aborted")]
    AbortThresholdExceeded { aborted: usize, trials: usize },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI should terminate with for this error.
    ///
    /// 2 = validation failure, 3 = numeric abort threshold exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::AbortThresholdExceeded { .. } => 3,
            _ => 2,
        }
    }
}
