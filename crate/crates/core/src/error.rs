use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {value} lies outside the {space} space")]
    Domain { value: f64, space: &'static str },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("gap-map inversion failed for y = {y} after {iterations} iterations")]
    NumericFailure { y: f64, iterations: usize },

    #[error("zero mass at n = {n} inside the fit window; shrink n_hi below {n}")]
    WindowTruncation { n: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
