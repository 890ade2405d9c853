use thiserror::Error;

/// Errors produced anywhere in the extraction and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported input format: {0}")]
    InputFormat(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("degenerate table: {0}")]
    DegenerateTable(String),
    #[error("ground truth: {0}")]
    GroundTruth(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("ocr failed: {0}")]
    Ocr(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
