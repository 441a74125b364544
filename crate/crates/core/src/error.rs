use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("folding bands overlap: f_c = {f_c} must be below 1/(2D) = {limit}")]
    OverlappingBands { f_c: f64, limit: f64 },

    #[error("overflow in stage {stage}: value {value} does not fit in {width} bits")]
    Overflow { stage: usize, value: i128, width: u32 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
