use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no closed-form tail for `{0}`; use a sampling path")]
    NoClosedFormTail(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("uniform stream exhausted")]
    StreamExhausted,

    #[error("method {method} unsupported: {reason}")]
    MethodUnsupported { method: String, reason: String },

    #[error("every threshold vector was skipped at {samples} samples (product probability below 10/samples)")]
    AllGridPointsSkipped { samples: u64 },

    #[error("non-positive inter-arrival time {0} sampled")]
    NonPositiveInterarrival(f64),

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("insufficient tail data: {0}")]
    InsufficientTailData(String),

    #[error("safety loading violated: mean claim {mean_claim} >= premium rate {premium_rate} x mean inter-arrival {mean_interarrival}")]
    SafetyLoading {
        mean_claim: f64,
        premium_rate: f64,
        mean_interarrival: f64,
    },

    #[error("I/O error: {0}")]
    Io(String),

    #[error("cannot parse `{text}`: {reason}")]
    Parse { text: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArg(msg.into())
    }

    pub(crate) fn io(context: impl std::fmt::Display, e: impl std::fmt::Display) -> Self {
        Error::Io(format!("{context}: {e}"))
    }

    pub(crate) fn parse(text: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            text: text.into(),
            reason: reason.into(),
        }
    }
}
