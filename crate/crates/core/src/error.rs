use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),
    #[error("period error: {0}")]
    Period(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("domain not nested: {0}")]
    DomainNotNested(String),
    #[error("degree error: expected {expected}, found {found}")]
    Degree { expected: i64, found: i64 },
    #[error("tracing error: {0}")]
    Tracing(String),
    #[error("search error: {0}")]
    Search(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("structure error: {0}")]
    Structure(String),
    #[error("approximation error: {0}")]
    Approximation(String),
    #[error("report error: {0}")]
    Report(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
