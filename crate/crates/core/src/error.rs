use thiserror::Error;

/// Every failure the library can report. The `code()` strings are stable and
/// appear in CLI output and reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("ERR_TWISTING: coefficient at power {power} violates the twisting layout (norm {norm:e})")]
    Twisting { power: i32, norm: f64 },
    #[error("ERR_DOMAIN: {0}")]
    Domain(String),
    #[error("ERR_NOT_UNIMODULAR: det loop deviates from 1 by {0:e}")]
    NotUnimodular(f64),
    #[error("ERR_NOT_BIG_CELL: reciprocal condition {rcond:e} below threshold")]
    NotBigCell { rcond: f64 },
    #[error("ERR_K_NOT_CONSTANT: middle factor varies by {0:e}")]
    KNotConstant(f64),
    #[error("ERR_NOT_POSITIVE: {0}")]
    NotPositive(String),
    #[error("ERR_PARSE at byte {pos}: {msg}; expected one of [{}]", expected.join(", "))]
    Parse { pos: usize, msg: String, expected: Vec<String> },
    #[error("ERR_POLE: {0}")]
    Pole(String),
    #[error("ERR_NO_REAL_ROOT: discriminant {0:e} is negative")]
    NoRealRoot(f64),
    #[error("ERR_CONSTRAINT: {0}")]
    Constraint(String),
    #[error("ERR_STEP: step size underflow at z = {0}")]
    Step(String),
    #[error("ERR_NOT_IN_H3: {0}")]
    NotInH3(String),
    #[error("ERR_LAWSON_DEGENERATE: cosh q - H sinh q = {0:e}")]
    LawsonDegenerate(f64),
    #[error("ERR_NONIMMERSION: conformal factor {0:e} at node")]
    NonImmersion(f64),
    #[error("ERR_NOT_FIXED: residual {0:e}")]
    NotFixed(f64),
    #[error("ERR_IO: {0}")]
    Io(String),
    #[error("ERR_CONFIG: {0}")]
    Config(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::Twisting { .. } => "ERR_TWISTING",
            Error::Domain(_) => "ERR_DOMAIN",
            Error::NotUnimodular(_) => "ERR_NOT_UNIMODULAR",
            Error::NotBigCell { .. } => "ERR_NOT_BIG_CELL",
            Error::KNotConstant(_) => "ERR_K_NOT_CONSTANT",
            Error::NotPositive(_) => "ERR_NOT_POSITIVE",
            Error::Parse { .. } => "ERR_PARSE",
            Error::Pole(_) => "ERR_POLE",
            Error::NoRealRoot(_) => "ERR_NO_REAL_ROOT",
            Error::Constraint(_) => "ERR_CONSTRAINT",
            Error::Step(_) => "ERR_STEP",
            Error::NotInH3(_) => "ERR_NOT_IN_H3",
            Error::LawsonDegenerate(_) => "ERR_LAWSON_DEGENERATE",
            Error::NonImmersion(_) => "ERR_NONIMMERSION",
            Error::NotFixed(_) => "ERR_NOT_FIXED",
            Error::Io(_) => "ERR_IO",
            Error::Config(_) => "ERR_CONFIG",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
