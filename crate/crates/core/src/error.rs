use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("structural mismatch: {0}")]
    Structure(String),
    #[error("all conditional amplitudes vanish on this branch")]
    ZeroBranch,
    #[error("relaxation time is infinite (lambda2 = {0})")]
    InfiniteTau(f64),
    #[error("no certification gap: eps_hon = {eps_hon} exceeds eps_cnl = {eps_cnl}")]
    NoGap { eps_hon: f64, eps_cnl: f64 },
    #[error("data error: {0}")]
    Data(String),
    #[error("no shots survived post-selection")]
    InsufficientAcceptance,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}
