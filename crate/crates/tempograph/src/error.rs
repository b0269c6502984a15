use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    /// Tensor or operator dimensions do not line up.
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    ShapeMismatch {
        op: &'static str,
        lhs: String,
        rhs: String,
    },

    /// An operation produced (or was given) a NaN or infinite value.
    #[error("non-finite value in {op}")]
    NonFinite { op: &'static str },

    /// A parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Mixing tensors recorded on different tapes.
    #[error("operands of {op} belong to different tapes")]
    TapeMismatch { op: &'static str },

    /// `backward` was called on a non-scalar or untracked tensor.
    #[error("backward requires a tracked scalar root, got {0}")]
    InvalidRoot(String),

    /// Graph construction violated an invariant.
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// Signal construction violated an invariant.
    #[error("invalid signal at t={t}: {message}")]
    InvalidSignal { t: usize, message: String },

    /// Dataset document failed schema validation.
    #[error("dataset schema violation: {0}")]
    Schema(String),

    /// Dataset JSON could not be parsed.
    #[error("dataset parse error: {0}")]
    Parse(String),

    /// Checkpoint file inconsistent with its declared configuration.
    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    /// Remote dataset does not exist.
    #[error("dataset not found at {url} (HTTP {status})")]
    NotFound { url: String, status: u16 },

    /// Network failure after retries.
    #[error("fetch failed for {url}: {message}")]
    Fetch { url: String, message: String },

    /// Cached file content does not match its recorded digest.
    #[error("cache integrity failure for {path}: stored hash does not match content")]
    HashMismatch { path: String },

    /// Training produced a NaN loss.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
