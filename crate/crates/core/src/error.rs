use thiserror::Error;

/// Errors raised by the height pipelines.
///
/// The variants map onto the process exit codes used by the command line
/// driver: domain problems exit with 1, numeric problems with 2 and
/// configuration problems with 3.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The evaluated section vanishes at the point, so the section does not
    /// intersect the cycle properly.
    #[error("section vanishes on the cycle: {0}")]
    DivisorMembership(String),

    #[error("numeric error: {message} (estimates {coarse} vs {fine})")]
    Numeric {
        message: String,
        coarse: f64,
        fine: f64,
    },

    #[error("resource limit: {message}; unfactored residue {residue}")]
    Resource { message: String, residue: String },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    pub fn numeric(msg: impl Into<String>, coarse: f64, fine: f64) -> Self {
        Error::Numeric {
            message: msg.into(),
            coarse,
            fine,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_)
            | Error::DivisorMembership(_)
            | Error::Resource { .. }
            | Error::Unsupported(_) => 1,
            Error::Numeric { .. } => 2,
            Error::Config(_) | Error::Parse(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
