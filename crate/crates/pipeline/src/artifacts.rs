use serde::{Deserialize, Serialize};

use crn_rulecore::canonicalize;

use crate::concepts::ConceptSet;
use crate::error::PipelineError;
use crate::infer::Prediction;
use crate::symbols::{SymbolOrigin, SymbolPool};

/// Stage-1 artifact: per-class concepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptsDoc {
    pub dataset: String,
    pub classes: Vec<ConceptsClassDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConceptsClassDoc {
    pub label: String,
    pub concepts: Vec<String>,
    pub source_image_ids: Vec<String>,
}

impl ConceptsDoc {
    pub fn from_sets(dataset: &str, sets: &[ConceptSet]) -> Self {
        ConceptsDoc {
            dataset: dataset.to_string(),
            classes: sets
                .iter()
                .map(|set| ConceptsClassDoc {
                    label: set.label.clone(),
                    concepts: set.concept_texts(),
                    source_image_ids: set.source_image_ids.clone(),
                })
                .collect(),
        }
    }

    pub fn to_sets(&self) -> Result<Vec<ConceptSet>, PipelineError> {
        self.classes
            .iter()
            .map(|class| {
                let concepts = class
                    .concepts
                    .iter()
                    .map(|text| {
                        canonicalize(text).map_err(|e| {
                            PipelineError::ManifestInvalid(format!(
                                "concepts for {:?}: field \"concepts\" entry {text:?}: {e}",
                                class.label
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ConceptSet {
                    label: class.label.clone(),
                    concepts,
                    source_image_ids: class.source_image_ids.clone(),
                })
            })
            .collect()
    }
}

/// Stage-2 artifact: per-class explored symbol pools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolsDoc {
    pub dataset: String,
    pub classes: Vec<SymbolsClassDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolsClassDoc {
    pub label: String,
    pub symbols: Vec<SymbolEntryDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolEntryDoc {
    pub symbol: String,
    pub origin: SymbolOrigin,
}

impl SymbolsDoc {
    pub fn from_pools(dataset: &str, pools: &[SymbolPool]) -> Self {
        SymbolsDoc {
            dataset: dataset.to_string(),
            classes: pools
                .iter()
                .map(|pool| SymbolsClassDoc {
                    label: pool.label.clone(),
                    symbols: pool
                        .iter()
                        .map(|(symbol, origin)| SymbolEntryDoc {
                            symbol: symbol.canonical().to_string(),
                            origin: *origin,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn to_pools(&self) -> Result<Vec<SymbolPool>, PipelineError> {
        self.classes
            .iter()
            .map(|class| {
                let mut pool = SymbolPool::new(&class.label);
                for entry in &class.symbols {
                    let symbol = canonicalize(&entry.symbol).map_err(|e| {
                        PipelineError::ManifestInvalid(format!(
                            "symbols for {:?}: field \"symbol\" value {:?}: {e}",
                            class.label, entry.symbol
                        ))
                    })?;
                    pool.insert(symbol, entry.origin);
                }
                Ok(pool)
            })
            .collect()
    }
}

/// Inference artifact: one record per item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionsDoc {
    pub dataset: String,
    pub task: String,
    pub split: String,
    pub labels: Vec<String>,
    pub items: Vec<PredictionRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub item_id: String,
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub fused: Vec<f64>,
    pub argmax: String,
    pub winning_rules: std::collections::BTreeMap<String, Option<String>>,
}

impl PredictionRecord {
    pub fn new(item_id: String, prediction: Prediction) -> Self {
        PredictionRecord {
            item_id,
            s1: prediction.s1,
            s2: prediction.s2,
            fused: prediction.fused,
            argmax: prediction.argmax,
            winning_rules: prediction.winning_rules,
        }
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("artifact serializes");
    text.push('\n');
    text
}
