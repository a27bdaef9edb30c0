//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TokenError {
    #[error("empty token")]
    Empty,
    #[error("token contains whitespace: {0:?}")]
    Whitespace(String),
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("unexpected token {token:?} at position {position}")]
    Unexpected { position: usize, token: String },
    #[error("unexpected end of input at position {position}")]
    Eof { position: usize },
}

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("primitive {0:?} not found in sample source")]
    NotFound(String),
    #[error("primitive {0:?} occurs more than once in sample source")]
    Ambiguous(String),
    #[error("inventory mismatch: prompt context sample {0:?} is absent from the base set")]
    InventoryMismatch(String),
    #[error("variant {0:?} has no candidate training samples")]
    InsufficientSamples(String),
    #[error("level {0} is not defined for this scheme")]
    UnsupportedLevel(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("variable {variable:?} has no binding in sentence {sentence:?}")]
    MissingBinding { variable: String, sentence: String },
    #[error("primitive {primitive:?} for variable {variable:?} never occurs as a binding")]
    PrimitiveNotInCorpus { variable: String, primitive: String },
    #[error("hypernym variable set is empty")]
    NoHypernyms,
    #[error("corpus read failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus parse failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite loss at epoch {epoch}, step {step} (loss = {loss})")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("checkpoint i/o failed: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format error: {0}")]
    Format(String),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("malformed sample line {line}: {reason}")]
    BadLine { line: usize, reason: String },
    #[error(transparent)]
    Token(#[from] TokenError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
