use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("ill-conditioned operation: {0}")]
    IllConditioned(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("ENL undefined: zero variance over region")]
    UndefinedEnl,

    #[error("no impulse peak found")]
    NoPeak,

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite activation at layer {layer}")]
    NonFiniteActivation { layer: String },

    #[error("stale activation cache: {0}")]
    StaleCache(String),

    #[error("non-finite gradient for parameter {param}")]
    NonFiniteGradient { param: String },

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Divergence { epoch: usize, batch: usize },

    #[error("degenerate channel {0}: zero standard deviation")]
    DegenerateChannel(String),

    #[error("missing standardization statistics")]
    MissingStatistics,

    #[error("standardization mismatch: {0}")]
    StandardizationMismatch(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("truncated file: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
