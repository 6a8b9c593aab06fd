use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: factual has {factual} features, counterfactual has {counterfactual}")]
    LengthMismatch { factual: usize, counterfactual: usize },

    #[error("empty delta: factual and counterfactual are identical")]
    EmptyDelta,

    #[error("feature index {index} out of range for instance of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("feature index {0} is not part of the delta")]
    IndexNotInDelta(usize),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("failed to spawn bridge `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("bridge handshake failed: {0}")]
    Handshake(String),

    #[error("bridge protocol violation: {0}")]
    Protocol(String),

    #[error("bridge reported an error for request {id}: {message}")]
    Bridge { id: u64, message: String },

    #[error("bridge did not answer within {0} ms")]
    BridgeTimeout(u64),

    #[error("score {score} at position {position} is outside [0, 1]")]
    ScoreOutOfRange { position: usize, score: f64 },

    #[error("model expects {expected} features, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("model cannot score instance: {0}")]
    Unscorable(String),

    #[error("delta has {k} changes, above the cap of {cap}")]
    DeltaTooLarge { k: usize, cap: usize },

    #[error("CounterShapley values sum to zero; percentage shares are undefined")]
    DegenerateSum,

    #[error("invalid chart style: {0}")]
    Style(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Whether this error originates from a model or its bridge process.
    pub fn is_model_failure(&self) -> bool {
        matches!(
            self,
            Error::Spawn { .. }
                | Error::Handshake(_)
                | Error::Protocol(_)
                | Error::Bridge { .. }
                | Error::BridgeTimeout(_)
                | Error::ScoreOutOfRange { .. }
                | Error::ArityMismatch { .. }
                | Error::Unscorable(_)
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
