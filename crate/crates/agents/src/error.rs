use thiserror::Error;

/// Errors from agent transports and reply parsers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AgentError {
    #[error("transport failure{}: {message}", status.map(|s| format!(" (status {s})")).unwrap_or_default())]
    Transport { status: Option<u16>, message: String },
    #[error("request timed out")]
    Timeout,
    #[error("malformed request: {0}")]
    MalformedRequest(String),
    #[error("malformed reply: {0}")]
    MalformedReply(String),
    #[error("unbound placeholder: {0}")]
    UnboundPlaceholder(String),
    #[error("no concepts could be parsed from the reply")]
    EmptyConceptList,
    #[error("ambiguous entailment reply: {0}")]
    AmbiguousEntailment(String),
    #[error("verifier reply unusable: no yes/no alternatives present")]
    VerifierUnusable,
}

impl AgentError {
    /// Whether a retry could plausibly succeed.
    pub fn is_transient(&self) -> bool {
        match self {
            AgentError::Timeout => true,
            AgentError::Transport { status, .. } => match status {
                Some(s) => *s == 408 || *s == 429 || *s >= 500,
                None => true,
            },
            _ => false,
        }
    }
}
