//! A seeded generative world with oracle agents.
//!
//! The world makes the pipeline's qualitative behaviors checkable offline at
//! desk scale: grounding context lowers the modeled hallucination rate, rule
//! fusion corrects a deliberately noisy system-1, and verification noise is
//! controlled. The grounding effect is modeled, not discovered: these oracles
//! validate that the pipeline transmits grounding context and that the
//! measurement code is correct; they say nothing about real language models.

mod measure;
mod oracle;
mod spec;
mod world;

pub use measure::hallucination_rate;
pub use oracle::OracleTransport;
pub use spec::{ClassSpec, WorldError, WorldSpec};
pub use world::{derive_rng, SynthImage, World};
