use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("singular matrix (condition estimate {condition:e})")]
    SingularMatrix { condition: f64 },
    #[error("quadrature failed to converge (error estimate {error_estimate:e} after {subdivisions} subdivisions)")]
    Quadrature {
        error_estimate: f64,
        subdivisions: usize,
    },
    #[error("no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("root finder did not converge after {iterations} iterations")]
    RootNotConverged { iterations: usize },
    #[error("fit did not converge: {reason} (iterations {iterations}, last gradient norm {gradient_norm:e})")]
    Fit {
        reason: String,
        iterations: usize,
        gradient_norm: f64,
        trace: Vec<f64>,
    },
    #[error("no interior maximum: coordinate {coordinate} = {value:e} is drifting to its open bound")]
    /// `coordinate` is 1-based, as in the fit table.
    NoInteriorMaximum { coordinate: usize, value: f64 },
    #[error("inconsistent fits: profile log-likelihood exceeds the maximum by {excess:e}")]
    InconsistentFit { excess: f64 },
    #[error("covariance error: {0}")]
    Covariance(String),
    #[error("fit quality error: {0}")]
    FitQuality(String),
    #[error("singularity error: U/R = {ratio} at R = {r}")]
    Singularity { r: f64, ratio: f64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, with any context layers removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
