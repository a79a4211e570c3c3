use thiserror::Error;

/// Errors raised by the numerical and physical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix dimension {dim} exceeds the supported maximum of {max}")]
    Dimension { dim: usize, max: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("eigensolver did not converge after {iterations} QR sweeps")]
    NoConvergence { iterations: usize },

    #[error("leading coefficient of the cubic is zero")]
    Degree,

    #[error("matrix is singular within tolerance (pivot {pivot:.3e}, scale {scale:.3e})")]
    Singular { pivot: f64, scale: f64 },

    #[error("resolvent is singular at detuning {delta}")]
    SingularResolvent { delta: f64 },

    #[error("{0}")]
    Domain(String),

    #[error("omega = {omega} lies within {radius:e} of an exceptional point")]
    NearExceptionalPoint { omega: f64, radius: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("trace drifted by {drift:.3e} with dt = {dt}; use a smaller dt")]
    TraceDrift { drift: f64, dt: f64 },

    #[error("spectral fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
