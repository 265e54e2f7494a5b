use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("scenario failed validation: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("bin ({range_bin}, {doppler_bin}) outside map of {n_range} x {n_doppler}")]
    BinOutOfRange { range_bin: usize, doppler_bin: usize, n_range: usize, n_doppler: usize },

    #[error("failed to parse scenario: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("scenario line {line} column {column}, field `{field}`: {message}")]
    ScenarioParse { field: String, line: usize, column: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name, reason: format!("must be finite and positive, got {value}") })
    }
}
