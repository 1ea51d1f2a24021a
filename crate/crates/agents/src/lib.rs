//! Abstract chat agents: endpoint descriptors, the prompt templates used by
//! every pipeline stage, an OpenAI-compatible wire client, reply parsers, and
//! verifier yes/no scoring.
//!
//! The [`Transport`] trait decouples callers from the wire: the HTTP client,
//! the transcript mock, and the synthetic-world oracles all implement it, so
//! the whole pipeline can run offline and deterministically in tests.

mod endpoint;
mod error;
mod http;
mod parsers;
mod prompt;
mod reply;
mod score;
mod transport;

pub use endpoint::{AgentEndpoint, AgentRole, Stimulus};
pub use error::AgentError;
pub use http::HttpTransport;
pub use parsers::{parse_concept_list, parse_entailment_choice, ENTAILMENT_CHOICES};
pub use prompt::{render_prompt, PromptBindings, TemplateId};
pub use reply::{AgentReply, TokenAlternative};
pub use score::{score_yes_no, score_yes_no_with, YesNoScore, DEFAULT_ONE_SIDED_DELTA};
pub use transport::{complete, AgentHandle, RetryPolicy, Transport, TranscriptTransport};

/// Sampling temperature for visual concept extraction.
pub const CONCEPT_TEMPERATURE: f64 = 0.2;
/// Sampling temperature for symbol initialization and exploration.
pub const EXPLORE_TEMPERATURE: f64 = 0.7;
/// Sampling temperature for entailment scoring.
pub const ENTAIL_TEMPERATURE: f64 = 0.0;
