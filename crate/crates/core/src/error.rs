use thiserror::Error;

/// Failure modes shared by all modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("evaluation error at node {node:?}: {msg}")]
    Evaluation { node: Vec<f64>, msg: String },
    #[error("usage error: {0}")]
    Usage(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("conditioning error: |H0(rho)| below floor at rho = {rho}")]
    Conditioning { rho: f64 },
    #[error("degenerate energy: {0}")]
    Degenerate(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("search failure: {0}")]
    Search(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Error {
    Error::Domain { op, msg: msg.into() }
}
