use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input lies outside the domain of a formula.
    #[error("domain error: {what} (got {value:e})")]
    Domain { what: &'static str, value: f64 },

    /// Population at the Fock-space cutoff exceeded the allowed bound.
    #[error("truncation overflow: population {population:e} at n = {n_max} exceeds {limit:e}")]
    Truncation {
        n_max: usize,
        population: f64,
        limit: f64,
    },

    /// Finite-difference step became too small to resolve the function.
    #[error("finite-difference oracle underflow at z = {z:e} (step {step:e})")]
    StepUnderflow { z: f64, step: f64 },

    /// Configuration rejected; `path` is the dotted key path.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
