//! IO-layer errors; core numerical errors pass through transparently.

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("column '{0}' not found in CSV header")]
    MissingColumn(String),

    #[error("row {row}, column '{column}': cannot parse '{value}' as a real number")]
    Parse {
        /// 1-based data row (excluding the header).
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}: expected {expected} fields, got {got}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },

    #[error("manifest schema: {0}")]
    Schema(String),

    #[error("unsupported model format tag '{got}' (expected '{expected}')")]
    FormatTag { expected: String, got: String },

    #[error("capacity guard: {0}")]
    Capacity(String),

    #[error(transparent)]
    Core(#[from] modro_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
