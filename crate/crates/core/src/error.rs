use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("k-coefficient order n = {n} outside the admissible range 1..={max}")]
    KOrderOutOfRange { n: u32, max: u32 },

    #[error("operator is not Hermitian: residual imaginary coefficient on {0}")]
    NonHermitian(String),

    #[error("closed-form bracket {{{left}, {right}}} disagrees with the operator oracle")]
    ConventionMismatch { left: String, right: String },

    #[error("symbol {0} is not covered by the bracket table")]
    UnknownSymbol(String),

    #[error("resource guard: order {order} x {pairs} pairs exceeds the ceiling {ceiling}")]
    ResourceLimit { order: u32, pairs: usize, ceiling: u32 },

    #[error("state is missing moment {0}")]
    MissingMoment(String),

    #[error("coordinate singularity: {0}")]
    Singularity(String),

    #[error("outside the domain: {0}")]
    Domain(String),

    #[error("no equilibrium width at q = {q}: V''(q) = {curvature} is not positive")]
    NoEquilibrium { q: f64, curvature: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("step budget exhausted at t = {t} after {steps} steps")]
    StepsExhausted { t: f64, steps: u64 },

    #[error("state became non-finite; last good time t = {t}")]
    NonFinite { t: f64 },

    #[error("grid resolution: {0}")]
    Resolution(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
