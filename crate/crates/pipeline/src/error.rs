use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PipelineError {
    #[error("stage failure: {0}")]
    StageFailure(String),
    #[error("verification failure: {0}")]
    VerificationFailure(String),
    #[error("invalid manifest: {0}")]
    ManifestInvalid(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("vector length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Agent(#[from] crn_agents::AgentError),
    #[error(transparent)]
    Rule(#[from] crn_rulecore::RuleError),
}
