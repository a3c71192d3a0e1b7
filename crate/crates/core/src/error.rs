use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("G_plus ≥ G_minus violated (G_plus = {g_plus}, G_minus = {g_minus})")]
    CouplingOrder { g_plus: f64, g_minus: f64 },

    #[error("steady-state fixed point did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("pump detuning {detuning} does not match the sideband {expected} for cavity {cavity}")]
    SidebandMismatch { cavity: char, detuning: f64, expected: f64 },

    #[error("singular scattering system at omega = {omega} (condition number {condition:e})")]
    Singular { omega: f64, condition: f64 },

    #[error("no signal: normalization Z = {z:e} vanishes")]
    NoSignal { z: f64 },

    #[error("zero denominator in correlation coefficient")]
    ZeroDenominator,

    #[error("no boundary at r = {r}: radicand {radicand:e} is negative")]
    NoBoundary { r: f64, radicand: f64 },

    #[error("empty feasible interval for the working-point search")]
    EmptyInterval,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
