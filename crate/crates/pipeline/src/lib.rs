//! The three-stage pipeline: image-conditioned concept extraction, symbol
//! exploration plus rule formation, and verification fused with a system-1
//! classifier. Also the counterfactual rule augmentation.
//!
//! Stages run sequentially; independent agent calls inside a stage run
//! concurrently up to a configured limit, and every output is re-sorted so
//! runs are deterministic given a seed and a deterministic transport.

mod artifacts;
mod concepts;
mod concurrent;
mod config;
mod error;
mod infer;
mod manifest;
mod rules;
mod seed;
mod symbols;

pub use artifacts::{ConceptsDoc, PredictionRecord, PredictionsDoc, SymbolsDoc};
pub use concepts::{extract_concepts, ConceptSet};
pub use concurrent::parallel_map;
pub use config::{EntailmentAggregation, PipelineConfig};
pub use error::PipelineError;
pub use infer::{
    classify_system1, fuse, infer_split, verify_image, InferStats, Prediction, VerifyOutcome,
};
pub use manifest::{Manifest, ManifestItem, Split, VisualInput};
pub use rules::{augment_counterfactual, form_and_filter_rules, RuleFormationStats};
pub use seed::derive_rng;
pub use symbols::{explore, init_symbols, ExploreStats, SymbolOrigin, SymbolPool};
