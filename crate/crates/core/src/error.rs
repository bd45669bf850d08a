use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input file does not follow the declared schema.
    #[error("schema error{}: {msg}", row_suffix(*.row))]
    Schema { row: Option<usize>, msg: String },

    /// Input parses but violates a data invariant.
    #[error("data error{}: {msg}", row_suffix(*.row))]
    Data { row: Option<usize>, msg: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("convergence failure: {0}")]
    Convergence(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn row_suffix(row: Option<usize>) -> String {
    match row {
        Some(r) => format!(" at row {r}"),
        None => String::new(),
    }
}

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data { row: None, msg: msg.into() }
    }

    pub fn data_at(row: usize, msg: impl Into<String>) -> Self {
        Error::Data { row: Some(row), msg: msg.into() }
    }

    pub fn schema(msg: impl Into<String>) -> Self {
        Error::Schema { row: None, msg: msg.into() }
    }

    pub fn schema_at(row: usize, msg: impl Into<String>) -> Self {
        Error::Schema { row: Some(row), msg: msg.into() }
    }

    /// True for errors caused by the content of user-supplied data, as opposed
    /// to numerical failures.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Data { .. }
                | Error::Domain(_)
                | Error::InsufficientData(_)
                | Error::Degenerate(_)
                | Error::InvalidInput(_)
                | Error::Csv(_)
                | Error::Json(_)
                | Error::Io(_)
        )
    }
}
