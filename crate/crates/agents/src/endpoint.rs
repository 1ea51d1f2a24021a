use std::path::PathBuf;

use serde::{Deserialize, Serialize};

/// What an agent is used for in the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    VisualConcept,
    Linguistic,
    Verifier,
    System1,
}

impl AgentRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentRole::VisualConcept => "visual_concept",
            AgentRole::Linguistic => "linguistic",
            AgentRole::Verifier => "verifier",
            AgentRole::System1 => "system1",
        }
    }

    /// Visual roles consume an image (or synthetic image) stimulus.
    pub fn is_visual(&self) -> bool {
        !matches!(self, AgentRole::Linguistic)
    }
}

/// Descriptor for one chat agent. Immutable and cheap to clone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentEndpoint {
    pub base_url: String,
    pub model: String,
    pub role: AgentRole,
    pub temperature: f64,
    pub max_tokens: u32,
    pub request_logprobs: bool,
    pub top_alternatives: u32,
}

impl AgentEndpoint {
    /// Builds an endpoint with role-appropriate defaults: verifier and
    /// system-1 endpoints always request token alternatives.
    pub fn new(role: AgentRole, base_url: impl Into<String>, model: impl Into<String>) -> Self {
        let (temperature, request_logprobs) = match role {
            AgentRole::VisualConcept => (crate::CONCEPT_TEMPERATURE, false),
            AgentRole::Linguistic => (crate::EXPLORE_TEMPERATURE, false),
            AgentRole::Verifier => (0.0, true),
            AgentRole::System1 => (0.0, true),
        };
        AgentEndpoint {
            base_url: base_url.into(),
            model: model.into(),
            role,
            temperature,
            max_tokens: 256,
            request_logprobs,
            top_alternatives: 5,
        }
    }

    pub fn with_temperature(mut self, temperature: f64) -> Self {
        assert!(temperature >= 0.0, "temperature must be non-negative");
        self.temperature = temperature;
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    /// Verifier endpoints ignore attempts to turn alternatives off.
    pub fn with_request_logprobs(mut self, request: bool) -> Self {
        self.request_logprobs = request || self.role == AgentRole::Verifier;
        self
    }
}

/// One agent call's input: a text part plus at most one visual part.
///
/// `sample_index` distinguishes repeated draws of the same prompt (exploration
/// rounds); deterministic transports fold it into their seed and the response
/// cache folds it into its key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub text: String,
    pub image: Option<PathBuf>,
    pub synth_id: Option<String>,
    pub sample_index: u32,
}

impl Stimulus {
    pub fn text_only(text: impl Into<String>) -> Self {
        Stimulus {
            text: text.into(),
            image: None,
            synth_id: None,
            sample_index: 0,
        }
    }

    pub fn with_image(text: impl Into<String>, image: impl Into<PathBuf>) -> Self {
        Stimulus {
            text: text.into(),
            image: Some(image.into()),
            synth_id: None,
            sample_index: 0,
        }
    }

    pub fn with_synth(text: impl Into<String>, synth_id: impl Into<String>) -> Self {
        Stimulus {
            text: text.into(),
            image: None,
            synth_id: Some(synth_id.into()),
            sample_index: 0,
        }
    }

    pub fn with_sample_index(mut self, index: u32) -> Self {
        self.sample_index = index;
        self
    }

    /// Checks the stimulus shape against the target role: visual agents take
    /// exactly one of image/synth, text agents take neither.
    pub fn check_for_role(&self, role: AgentRole) -> Result<(), crate::AgentError> {
        let visual_parts = usize::from(self.image.is_some()) + usize::from(self.synth_id.is_some());
        if role.is_visual() && visual_parts != 1 {
            return Err(crate::AgentError::MalformedRequest(format!(
                "{} agent requires exactly one image or synthetic part, got {visual_parts}",
                role.as_str()
            )));
        }
        if !role.is_visual() && visual_parts != 0 {
            return Err(crate::AgentError::MalformedRequest(
                "text agent does not accept visual parts".to_string(),
            ));
        }
        Ok(())
    }
}
