use thiserror::Error;

use crate::dynamics::ResonanceDiagnostics;
use crate::integrate::{IntegrationFailure, Trajectory};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("x = {x} lies outside the potential domain (left endpoint {left})")]
    Domain { x: f64, left: f64 },

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("root finder did not converge after {iterations} iterations (last iterate {last})")]
    RootNoConvergence { iterations: usize, last: f64 },

    #[error("quadrature on [{a}, {b}] stopped at error {error:e} (target {target:e}) after {subdivisions} subdivisions")]
    Quadrature {
        a: f64,
        b: f64,
        error: f64,
        target: f64,
        subdivisions: usize,
    },

    #[error("integration failed: {0}")]
    Integration(Box<IntegrationFailure<Trajectory>>),

    /// Failure of an auxiliary (non phase-plane) integration; no partial data is kept.
    #[error("integration failed at t = {t}: {reason}")]
    Auxiliary { t: f64, reason: String },

    #[error("orbit did not return to the section within t = {limit}")]
    NoReturn { limit: f64 },

    #[error("the center (0, 0) has no action-angle representation")]
    CenterPoint,

    #[error("potential is not isochronous with a known integer N")]
    NotIsochronous,

    #[error("winding boundary passes too close to a zero (|value| = {modulus:e} at theta = {theta}, r = {r})")]
    BoundaryNearZero { modulus: f64, theta: f64, r: f64 },

    #[error("energy envelope violated at t = {t}: slack {slack:e}")]
    EnvelopeViolation { t: f64, slack: f64 },

    /// A resonance run stopped early; `partial` covers the completed windows.
    #[error("resonance run aborted after {} windows: {reason}", partial.window_sup.len())]
    RunAborted {
        reason: String,
        partial: Box<ResonanceDiagnostics>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Partial trajectory carried by an integration failure, if any.
    pub fn partial_trajectory(&self) -> Option<&Trajectory> {
        match self {
            Error::Integration(f) => Some(&f.partial),
            _ => None,
        }
    }
}
