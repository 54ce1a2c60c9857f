use thiserror::Error;

use crate::continuation::Branch;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent {0}: must be a finite number greater than 1")]
    InvalidExponent(f64),

    #[error("exponents must differ (got p = q = {0})")]
    EqualExponents(f64),

    #[error("invalid interval length {0}: must be finite and positive")]
    InvalidLength(f64),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("wrong exponent regime: {0}")]
    WrongRegime(&'static str),

    #[error("function has vanishing L^q mass ({mass:e} below floor {floor:e})")]
    ZeroFunction { mass: f64, floor: f64 },

    #[error(
        "cannot project onto the Nehari set: λ∫|u|^q − ∫|∇u|^q = {denominator:e} is not positive"
    )]
    NotProjectable { denominator: f64 },

    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("mode {k} needs at least {needed} elements, mesh has {available}")]
    InfeasibleNodalPattern {
        k: usize,
        needed: usize,
        available: usize,
    },

    #[error("ODE integration failed near x = {x}: step size underflow")]
    IntegrationFailure { x: f64 },

    #[error("branch broken at point {index} (rho = {rho:e}): {source}")]
    BranchBroken {
        index: usize,
        rho: f64,
        partial: Box<Branch>,
        #[source]
        source: Box<Error>,
    },

    #[error("extrapolation model fits poorly (relative rms residual {rms:e})")]
    PoorFit { rms: f64 },

    #[error("level gap {gap:e} at rho = {rho:e} is below the floating-point floor")]
    NonPositiveGap { rho: f64, gap: f64 },

    #[error("no sign change of λ_{mode}(ρ) − λ found on the scanned mass range")]
    BracketNotFound { mode: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

pub(crate) fn check_exponent(s: f64) -> Result<()> {
    if s.is_finite() && s > 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(s))
    }
}
