use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value of {what} at t = {t}")]
    Evaluation { what: String, t: f64 },
    #[error("barrier domain violated: z[{component}] = {value} at t = {t}")]
    BarrierDomain { component: usize, t: f64, value: f64 },
    #[error("linear algebra failure: {0}")]
    Singular(String),
    #[error("unknown problem '{name}' (registered: {registered})")]
    UnknownProblem { name: String, registered: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { what, expected, got })
    }
}
