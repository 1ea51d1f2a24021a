use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

/// How multiple entailment samples per candidate are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntailmentAggregation {
    /// One entailment call per candidate.
    Single,
    Max,
    Mean,
}

/// Knobs for a pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Concepts requested per training image (M).
    pub concepts_per_image: usize,
    /// Initial premise symbols per class (K).
    pub initial_symbols: usize,
    /// Maximum conjunction groups per rule.
    pub max_rule_len: usize,
    /// Entailment threshold ε; rules must score strictly above it.
    pub entailment_threshold: f64,
    /// Symbol exploration rounds per class.
    pub exploration_iterations: usize,
    /// Training images sampled per class (n).
    pub images_per_class: usize,
    /// Fusion weight λ between system-1 and system-2.
    pub fusion_weight: f64,
    pub seed: u64,
    /// When false, stage 2 omits the visual concepts from every prompt.
    pub grounded: bool,
    /// Cap on entailment candidates per class.
    pub candidate_budget: usize,
    /// Entailment calls per candidate.
    pub entailment_samples: usize,
    pub entailment_aggregation: EntailmentAggregation,
    /// Concurrent agent calls within a stage.
    pub max_in_flight: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            concepts_per_image: 5,
            initial_symbols: 5,
            max_rule_len: 3,
            entailment_threshold: 0.7,
            exploration_iterations: 7,
            images_per_class: 50,
            fusion_weight: 0.5,
            seed: 0,
            grounded: true,
            candidate_budget: 64,
            entailment_samples: 1,
            entailment_aggregation: EntailmentAggregation::Single,
            max_in_flight: 8,
        }
    }
}

impl PipelineConfig {
    /// Per-dataset-family settings: medical presets run 10 exploration
    /// iterations, the others 7; λ follows the per-dataset tuning.
    pub fn preset(name: &str) -> Option<PipelineConfig> {
        let base = PipelineConfig::default();
        let preset = match name {
            "blood" | "derma" | "medical" => PipelineConfig {
                exploration_iterations: 10,
                fusion_weight: 0.5,
                ..base
            },
            "satellite" => PipelineConfig {
                exploration_iterations: 7,
                fusion_weight: 0.7,
                ..base
            },
            "whu" => PipelineConfig {
                exploration_iterations: 7,
                fusion_weight: 0.5,
                ..base
            },
            "inaturalist" => PipelineConfig {
                exploration_iterations: 7,
                fusion_weight: 0.7,
                ..base
            },
            _ => return None,
        };
        Some(preset)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::InvalidConfig(m));
        if !(0.0..=1.0).contains(&self.fusion_weight) {
            return fail(format!("fusion_weight {} outside [0, 1]", self.fusion_weight));
        }
        if !(self.entailment_threshold > 0.0 && self.entailment_threshold < 1.0) {
            return fail(format!(
                "entailment_threshold {} outside (0, 1)",
                self.entailment_threshold
            ));
        }
        if self.max_rule_len == 0 {
            return fail("max_rule_len must be at least 1".into());
        }
        for (name, value) in [
            ("concepts_per_image", self.concepts_per_image),
            ("initial_symbols", self.initial_symbols),
            ("exploration_iterations", self.exploration_iterations),
            ("images_per_class", self.images_per_class),
            ("candidate_budget", self.candidate_budget),
            ("entailment_samples", self.entailment_samples),
            ("max_in_flight", self.max_in_flight),
        ] {
            if value == 0 {
                return fail(format!("{name} must be at least 1"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid_and_match_the_stock_settings() {
        let cfg = PipelineConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.concepts_per_image, 5);
        assert_eq!(cfg.initial_symbols, 5);
        assert_eq!(cfg.max_rule_len, 3);
        assert_eq!(cfg.entailment_threshold, 0.7);
        assert_eq!(cfg.exploration_iterations, 7);
        assert_eq!(cfg.images_per_class, 50);
        assert_eq!(cfg.fusion_weight, 0.5);
        assert!(cfg.grounded);
        assert_eq!(cfg.candidate_budget, 64);
    }

    #[test]
    fn medical_preset_runs_ten_iterations() {
        let cfg = PipelineConfig::preset("blood").unwrap();
        assert_eq!(cfg.exploration_iterations, 10);
        assert_eq!(cfg.fusion_weight, 0.5);
        assert!(PipelineConfig::preset("satellite").unwrap().fusion_weight == 0.7);
        assert!(PipelineConfig::preset("nope").is_none());
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let mut cfg = PipelineConfig::default();
        cfg.fusion_weight = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.entailment_threshold = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = PipelineConfig::default();
        cfg.max_rule_len = 0;
        assert!(cfg.validate().is_err());
    }
}
