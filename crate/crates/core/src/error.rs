use thiserror::Error;

use crate::field::Representation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("expected {expected:?} representation, got {found:?}")]
    Representation {
        expected: Representation,
        found: Representation,
    },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical divergence: non-finite value after RK4 stage {stage} at t = {t}")]
    Divergence { stage: usize, t: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("empty cell: {0}")]
    EmptyCell(String),

    #[error("memory guard: {samples} samples exceeds limit {limit}")]
    MemoryGuard { samples: u128, limit: u128 },

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("snapshot format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
