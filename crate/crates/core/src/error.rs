use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// More than one rotor is reported failed; only descent is possible.
    #[error("unrecoverable configuration: {0} rotors failed")]
    Unrecoverable(usize),

    #[error("ballast would be negative: lift {lift_n} N is below platform weight {weight_n} N")]
    NegativeBallast { lift_n: f64, weight_n: f64 },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("config error: {0}")]
    ConfigKey(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// The simulation diverged; `index` is the trace record that tripped the guard.
    #[error("numeric blow-up at record {index} (t = {t} s): {field} = {value}")]
    Diverged {
        index: usize,
        t: f64,
        field: &'static str,
        value: f64,
    },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
        Error::Parse {
            line,
            message: e.to_string(),
        }
    }
}

pub(crate) fn ensure_finite(name: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(name))
    }
}
