use thiserror::Error;

pub type Result<T> = std::result::Result<T, SlmError>;

#[derive(Debug, Error)]
pub enum SlmError {
    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("vocabulary error: {0}")]
    Vocab(String),

    #[error("invalid derivation: {0}")]
    Derivation(String),

    #[error("illegal parser action {action}: {reason}")]
    IllegalAction { action: String, reason: String },

    #[error("search failure at position {position}: beam too narrow")]
    SearchFailure { position: usize },

    #[error("zero probability for token {token:?} (sentence {sentence}, position {position})")]
    ZeroProbability {
        sentence: usize,
        position: usize,
        token: String,
    },

    #[error("missing reference for utterance {0:?}")]
    MissingReference(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
