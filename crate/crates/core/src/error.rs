use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid medium: {0}")]
    InvalidMedium(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("steady state did not converge after {iterations} iterations (residual {residual:e})")]
    SteadyNotConverged { iterations: usize, residual: f64 },

    #[error("steady iterate left the admissible band [{lower}, {upper}] at x = {x}")]
    SteadyOutOfBand { x: f64, lower: f64, upper: f64 },

    #[error("CFL violation at t = {t}: dt*|h'| = {courant:e} exceeds dx = {dx:e}")]
    Cfl { t: f64, courant: f64, dx: f64 },

    #[error("non-finite value in solution at t = {t}")]
    NonFinite { t: f64 },

    #[error("front state invariant violated at t = {t}: {detail}")]
    Invariant { t: f64, detail: String },

    #[error("position {x} is outside the steady-state domain [{lo}, {hi}]")]
    OutsideSteadyDomain { x: f64, lo: f64, hi: f64 },

    #[error("no zero crossing of the shooting profile within {l_far}")]
    NoZeroCrossing { l_far: f64 },

    #[error("shooting profile exceeded a0 (wrong manifold) at c = {c}")]
    WrongManifold { c: f64 },

    #[error("speed bracket has no sign change: phi(lo) = {phi_lo:e}, phi(hi) = {phi_hi:e}")]
    NoBracket { phi_lo: f64, phi_hi: f64 },

    #[error("tau = {tau} outside the front range [{lo}, {hi}] of the trajectory")]
    TauOutOfRange { tau: f64, lo: f64, hi: f64 },

    #[error("front position is not strictly increasing near t = {t}")]
    NonMonotoneFront { t: f64 },

    #[error("empty window: {0}")]
    EmptyWindow(String),

    #[error("config error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
