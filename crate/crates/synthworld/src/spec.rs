use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WorldError {
    #[error("invalid world spec: {0}")]
    InvalidSpec(String),
    #[error("unknown label: {0}")]
    UnknownLabel(String),
    #[error("unknown image id: {0}")]
    UnknownImage(String),
    #[error("rule set has no literals")]
    EmptyRuleSet,
}

/// One class and its core (class-exclusive) symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    pub core_symbols: Vec<String>,
}

/// Ground truth for a synthetic world.
///
/// Class vocabularies are the union of per-class core symbols (disjoint
/// across classes) and a shared pool; distractors are plausible but never
/// present. All randomness derives from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldSpec {
    pub name: String,
    pub task: String,
    pub classes: Vec<ClassSpec>,
    pub shared_symbols: Vec<String>,
    pub distractor_symbols: Vec<String>,
    /// Presence probability of a class's own core symbols.
    pub core_presence: f64,
    /// Presence probability of shared symbols in every class.
    pub shared_presence: f64,
    /// Per-label, per-symbol presence overrides.
    #[serde(default)]
    pub presence_overrides: BTreeMap<String, BTreeMap<String, f64>>,
    /// Half-width of the uniform noise on evidence and verification.
    pub verifier_noise: f64,
    /// Probability that the concept oracle swaps an item for a distractor.
    pub concept_noise: f64,
    /// Hallucination rate of the linguistic oracle with grounding context.
    pub hallucination_grounded: f64,
    /// Hallucination rate of the linguistic oracle without it.
    pub hallucination_ungrounded: f64,
    /// Probability that supplied concepts constrain symbol proposals.
    pub concept_bias: f64,
    /// Probability a grounded entailment call rejects a rule containing a
    /// symbol outside the class vocabulary.
    pub entail_reject_grounded: f64,
    /// Probability an ungrounded entailment call accepts such a rule anyway.
    pub entail_accept_ungrounded: f64,
    /// System-1 confusion matrix in class order; rows sum to 1.
    pub confusion: Vec<Vec<f64>>,
    /// Weight the sampled winner gets in the system-1 probability vector.
    pub system1_confidence: f64,
    pub train_per_class: usize,
    pub test_per_class: usize,
    pub seed: u64,
}

impl WorldSpec {
    /// The stock five-class world used by the offline checks.
    pub fn default_world(seed: u64) -> WorldSpec {
        let class_names = ["alpha", "beta", "gamma", "delta", "epsilon"];
        let classes = class_names
            .iter()
            .map(|name| ClassSpec {
                name: name.to_string(),
                core_symbols: (1..=4).map(|i| format!("{name} marker {i}")).collect(),
            })
            .collect();
        WorldSpec {
            name: "synthworld-default".to_string(),
            task: "synthetic specimen".to_string(),
            classes,
            shared_symbols: vec!["shared texture".to_string(), "shared outline".to_string()],
            distractor_symbols: (1..=10).map(|i| format!("phantom trait {i}")).collect(),
            core_presence: 0.85,
            shared_presence: 0.5,
            presence_overrides: BTreeMap::new(),
            verifier_noise: 0.1,
            concept_noise: 0.0,
            hallucination_grounded: 0.15,
            hallucination_ungrounded: 0.4,
            concept_bias: 1.0,
            entail_reject_grounded: 0.9,
            entail_accept_ungrounded: 0.6,
            confusion: uniform_offdiag_confusion(5, 0.6),
            system1_confidence: 0.6,
            train_per_class: 20,
            test_per_class: 8,
            seed,
        }
    }

    /// A world whose class symbol sets separate perfectly: disjoint cores,
    /// no shared pool, every core symbol always present, no noise anywhere.
    pub fn separating(n_classes: usize, seed: u64) -> WorldSpec {
        let classes = (0..n_classes)
            .map(|i| ClassSpec {
                name: format!("class-{}", (b'a' + i as u8) as char),
                core_symbols: (1..=3)
                    .map(|j| format!("class-{} marker {j}", (b'a' + i as u8) as char))
                    .collect(),
            })
            .collect();
        WorldSpec {
            name: "synthworld-separating".to_string(),
            task: "synthetic specimen".to_string(),
            classes,
            shared_symbols: Vec::new(),
            distractor_symbols: (1..=6).map(|i| format!("phantom trait {i}")).collect(),
            core_presence: 1.0,
            shared_presence: 0.5,
            presence_overrides: BTreeMap::new(),
            verifier_noise: 0.0,
            concept_noise: 0.0,
            hallucination_grounded: 0.0,
            hallucination_ungrounded: 0.0,
            concept_bias: 1.0,
            entail_reject_grounded: 0.9,
            entail_accept_ungrounded: 0.6,
            confusion: identity_confusion(n_classes),
            system1_confidence: 0.6,
            train_per_class: 10,
            test_per_class: 8,
            seed,
        }
    }

    pub fn with_confusion_diagonal(mut self, diagonal: f64) -> WorldSpec {
        self.confusion = uniform_offdiag_confusion(self.classes.len(), diagonal);
        self
    }

    pub fn with_verifier_noise(mut self, sigma: f64) -> WorldSpec {
        self.verifier_noise = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> WorldSpec {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self) -> Result<(), WorldError> {
        let fail = |msg: String| Err(WorldError::InvalidSpec(msg));
        if self.classes.is_empty() {
            return fail("at least one class is required".into());
        }
        let mut names = BTreeSet::new();
        let mut cores: BTreeSet<&str> = BTreeSet::new();
        for class in &self.classes {
            if !names.insert(class.name.as_str()) {
                return fail(format!("duplicate class name {:?}", class.name));
            }
            if class.core_symbols.is_empty() {
                return fail(format!("class {:?} has no core symbols", class.name));
            }
            for symbol in &class.core_symbols {
                if !cores.insert(symbol.as_str()) {
                    return fail(format!("core symbol {symbol:?} appears in two classes"));
                }
            }
        }
        for symbol in &self.shared_symbols {
            if cores.contains(symbol.as_str()) {
                return fail(format!("shared symbol {symbol:?} collides with a core symbol"));
            }
        }
        for symbol in &self.distractor_symbols {
            if cores.contains(symbol.as_str()) || self.shared_symbols.contains(symbol) {
                return fail(format!("distractor {symbol:?} collides with the true vocabulary"));
            }
        }
        if self.distractor_symbols.is_empty() {
            return fail("at least one distractor symbol is required".into());
        }
        for (name, value) in [
            ("core_presence", self.core_presence),
            ("shared_presence", self.shared_presence),
            ("verifier_noise", self.verifier_noise),
            ("concept_noise", self.concept_noise),
            ("hallucination_grounded", self.hallucination_grounded),
            ("hallucination_ungrounded", self.hallucination_ungrounded),
            ("concept_bias", self.concept_bias),
            ("entail_reject_grounded", self.entail_reject_grounded),
            ("entail_accept_ungrounded", self.entail_accept_ungrounded),
            ("system1_confidence", self.system1_confidence),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return fail(format!("{name} = {value} is outside [0, 1]"));
            }
        }
        if self.hallucination_grounded > self.hallucination_ungrounded {
            return fail("hallucination_grounded must not exceed hallucination_ungrounded".into());
        }
        if self.confusion.len() != self.classes.len() {
            return fail(format!(
                "confusion matrix has {} rows for {} classes",
                self.confusion.len(),
                self.classes.len()
            ));
        }
        for (i, row) in self.confusion.iter().enumerate() {
            if row.len() != self.classes.len() {
                return fail(format!("confusion row {i} has {} entries", row.len()));
            }
            if row.iter().any(|v| *v < 0.0) {
                return fail(format!("confusion row {i} has a negative entry"));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return fail(format!("confusion row {i} sums to {sum}, expected 1"));
            }
        }
        for overrides in self.presence_overrides.values() {
            for value in overrides.values() {
                if !(0.0..=1.0).contains(value) {
                    return fail(format!("presence override {value} is outside [0, 1]"));
                }
            }
        }
        if self.train_per_class == 0 || self.test_per_class == 0 {
            return fail("train_per_class and test_per_class must be at least 1".into());
        }
        Ok(())
    }
}

pub(crate) fn identity_confusion(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub(crate) fn uniform_offdiag_confusion(n: usize, diagonal: f64) -> Vec<Vec<f64>> {
    let off = if n > 1 { (1.0 - diagonal) / (n - 1) as f64 } else { 0.0 };
    let diagonal = if n == 1 { 1.0 } else { diagonal };
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { diagonal } else { off }).collect())
        .collect()
}
