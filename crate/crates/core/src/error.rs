use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-smooth point: {0}")]
    NonSmooth(String),
    #[error("endpoint mismatch: {0}")]
    Endpoint(String),
    #[error("gauge error: {0}")]
    Gauge(String),
    #[error("accuracy error: {msg} (estimated error {estimate:e})")]
    Accuracy { msg: String, estimate: f64 },
    #[error("truncation error: tail bound {bound:e} not below tolerance at n = {n}")]
    Truncation { bound: f64, n: usize },
    #[error("invariant violation: {0}")]
    Invariant(String),
    #[error("divergence guard: {0}")]
    Divergence(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Prefixes the message and keeps the variant.
    pub fn context(self, prefix: &str) -> Self {
        match self {
            Error::Dimension(m) => Error::Dimension(format!("{prefix}: {m}")),
            Error::Degree(m) => Error::Degree(format!("{prefix}: {m}")),
            Error::Index(m) => Error::Index(format!("{prefix}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{prefix}: {m}")),
            Error::NonSmooth(m) => Error::NonSmooth(format!("{prefix}: {m}")),
            Error::Endpoint(m) => Error::Endpoint(format!("{prefix}: {m}")),
            Error::Gauge(m) => Error::Gauge(format!("{prefix}: {m}")),
            Error::Accuracy { msg, estimate } => Error::Accuracy { msg: format!("{prefix}: {msg}"), estimate },
            Error::Truncation { bound, n } => Error::Accuracy {
                msg: format!("{prefix}: series tail bound {bound:e} not below tolerance at n = {n}"),
                estimate: bound,
            },
            Error::Invariant(m) => Error::Invariant(format!("{prefix}: {m}")),
            Error::Divergence(m) => Error::Divergence(format!("{prefix}: {m}")),
        }
    }
}
