use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numerical failure: {what} (residual {residual:.3e})")]
    Numeric { what: String, residual: f64 },
    #[error("degenerate configuration: {0}")]
    Degenerate(String),
    #[error("no unintended receiver available for transmitter {0}")]
    NoNeighbor(usize),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("sampling budget exceeded: {expected:.3e} expected nodes per trial (limit {limit:.3e})")]
    Budget { expected: f64, limit: f64 },
    #[error("spec error: {0}")]
    Spec(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn numeric(what: impl Into<String>, residual: f64) -> Self {
        Error::Numeric { what: what.into(), residual }
    }

    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric { .. } => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Domain(_) => "domain",
            Error::Numeric { .. } => "numeric",
            Error::Degenerate(_) => "degenerate",
            Error::NoNeighbor(_) => "no-neighbor",
            Error::Contract(_) => "contract",
            Error::Budget { .. } => "budget",
            Error::Spec(_) => "spec",
            Error::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
