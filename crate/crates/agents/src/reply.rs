use serde::{Deserialize, Serialize};

/// A surface token form with its log-probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenAlternative {
    pub token: String,
    pub logprob: f64,
}

/// A completed agent call: full text plus the first generated token's
/// alternatives (empty only when log-probabilities were not requested).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentReply {
    pub text: String,
    pub first_token_alternatives: Vec<TokenAlternative>,
}

impl AgentReply {
    pub fn text_only(text: impl Into<String>) -> Self {
        AgentReply {
            text: text.into(),
            first_token_alternatives: Vec::new(),
        }
    }

    pub fn with_alternatives(
        text: impl Into<String>,
        alternatives: Vec<(&str, f64)>,
    ) -> Self {
        AgentReply {
            text: text.into(),
            first_token_alternatives: alternatives
                .into_iter()
                .map(|(token, logprob)| TokenAlternative {
                    token: token.to_string(),
                    logprob,
                })
                .collect(),
        }
    }
}
