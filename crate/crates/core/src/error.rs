use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("non-finite function value at x = {x}")]
    NonFinite { x: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("phase error: {0}")]
    Phase(String),

    #[error("series did not converge: {0}")]
    SeriesDivergence(String),

    #[error("difference stencil [{lo}, {hi}] leaves the phase of g = {g}")]
    StencilOutOfPhase { g: f64, lo: f64, hi: f64 },

    #[error("Fock truncation insufficient: {0}")]
    Truncation(String),

    #[error("at grid point (g = {g}, {axis2_name} = {axis2}): {source}")]
    AtGridPoint {
        g: f64,
        axis2_name: &'static str,
        axis2: f64,
        source: Box<Error>,
    },
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
