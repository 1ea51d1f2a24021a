use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::spec::{WorldError, WorldSpec};

/// A deterministic RNG for one named stream of a seeded computation.
///
/// Streams are split by hashing the seed with the context parts, so
/// concurrent callers drawing from different streams stay reproducible.
pub fn derive_rng(seed: u64, parts: &[&str]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update([0xff]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}

/// One sampled synthetic image: per-symbol presence plus noisy evidence
/// strength over the world's whole symbol universe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthImage {
    pub id: String,
    pub label: String,
    pub presence: BTreeMap<String, bool>,
    pub evidence: BTreeMap<String, f64>,
}

impl SynthImage {
    pub fn present_symbols(&self) -> Vec<&str> {
        self.presence
            .iter()
            .filter(|(_, present)| **present)
            .map(|(symbol, _)| symbol.as_str())
            .collect()
    }
}

/// A validated, indexed world. Immutable after generation.
#[derive(Debug, Clone)]
pub struct World {
    spec: WorldSpec,
    labels: Vec<String>,
    vocab_by_class: BTreeMap<String, BTreeSet<String>>,
    universe: Vec<String>,
}

impl World {
    /// Validates the spec and builds the symbol indexes.
    pub fn generate(spec: WorldSpec) -> Result<World, WorldError> {
        spec.validate()?;
        let labels: Vec<String> = spec.classes.iter().map(|c| c.name.clone()).collect();
        let mut vocab_by_class = BTreeMap::new();
        let mut universe: BTreeSet<String> = BTreeSet::new();
        for class in &spec.classes {
            let mut vocab: BTreeSet<String> = class.core_symbols.iter().cloned().collect();
            vocab.extend(spec.shared_symbols.iter().cloned());
            universe.extend(vocab.iter().cloned());
            vocab_by_class.insert(class.name.clone(), vocab);
        }
        universe.extend(spec.distractor_symbols.iter().cloned());
        Ok(World {
            spec,
            labels,
            vocab_by_class,
            universe: universe.into_iter().collect(),
        })
    }

    pub fn spec(&self) -> &WorldSpec {
        &self.spec
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn task(&self) -> &str {
        &self.spec.task
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn seed(&self) -> u64 {
        self.spec.seed
    }

    /// Core-plus-shared vocabulary of one class.
    pub fn vocab(&self, label: &str) -> Result<&BTreeSet<String>, WorldError> {
        self.vocab_by_class
            .get(label)
            .ok_or_else(|| WorldError::UnknownLabel(label.to_string()))
    }

    pub fn is_true_symbol(&self, label: &str, symbol: &str) -> Result<bool, WorldError> {
        Ok(self.vocab(label)?.contains(symbol))
    }

    pub fn is_distractor(&self, symbol: &str) -> bool {
        self.spec.distractor_symbols.iter().any(|d| d == symbol)
    }

    /// Every symbol the world knows about, sorted.
    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    /// Classes whose vocabulary contains the symbol.
    pub fn classes_of(&self, symbol: &str) -> Vec<&str> {
        self.labels
            .iter()
            .filter(|l| self.vocab_by_class[*l].contains(symbol))
            .map(|l| l.as_str())
            .collect()
    }

    /// π(label, symbol): presence probability of a symbol in images of a class.
    pub fn presence_probability(&self, label: &str, symbol: &str) -> Result<f64, WorldError> {
        if let Some(value) = self
            .spec
            .presence_overrides
            .get(label)
            .and_then(|m| m.get(symbol))
        {
            return Ok(*value);
        }
        let class = self
            .spec
            .classes
            .iter()
            .find(|c| c.name == label)
            .ok_or_else(|| WorldError::UnknownLabel(label.to_string()))?;
        if class.core_symbols.iter().any(|s| s == symbol) {
            Ok(self.spec.core_presence)
        } else if self.spec.shared_symbols.iter().any(|s| s == symbol) {
            Ok(self.spec.shared_presence)
        } else {
            Ok(0.0)
        }
    }

    pub fn image_id(label: &str, split: &str, index: usize) -> String {
        format!("{label}:{split}:{index:04}")
    }

    /// Regenerates the image identified by `<label>:<split>:<index>`.
    pub fn image_by_id(&self, id: &str) -> Result<SynthImage, WorldError> {
        let mut parts = id.rsplitn(3, ':');
        let index = parts
            .next()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| WorldError::UnknownImage(id.to_string()))?;
        let split = parts
            .next()
            .ok_or_else(|| WorldError::UnknownImage(id.to_string()))?
            .to_string();
        let label = parts
            .next()
            .ok_or_else(|| WorldError::UnknownImage(id.to_string()))?;
        self.sample_image(label, &split, index)
    }

    /// Samples one image deterministically from (label, split, index).
    pub fn sample_image(
        &self,
        label: &str,
        split: &str,
        index: usize,
    ) -> Result<SynthImage, WorldError> {
        if !self.vocab_by_class.contains_key(label) {
            return Err(WorldError::UnknownLabel(label.to_string()));
        }
        let id = Self::image_id(label, split, index);
        let mut rng = derive_rng(self.spec.seed, &["image", &id]);
        let sigma = self.spec.verifier_noise;
        let mut presence = BTreeMap::new();
        let mut evidence = BTreeMap::new();
        for symbol in &self.universe {
            let pi = self.presence_probability(label, symbol)?;
            let present = rng.gen_bool(pi);
            let base = if present { 1.0 } else { 0.0 };
            let noise = if sigma > 0.0 {
                rng.gen_range(-sigma..=sigma)
            } else {
                0.0
            };
            presence.insert(symbol.clone(), present);
            evidence.insert(symbol.clone(), (base + noise).clamp(0.0, 1.0));
        }
        Ok(SynthImage {
            id,
            label: label.to_string(),
            presence,
            evidence,
        })
    }

    /// (id, label, split) triples for the whole world, train then test,
    /// classes in label order.
    pub fn items(&self) -> Vec<(String, String, String)> {
        let mut items = Vec::new();
        for (split, count) in [
            ("train", self.spec.train_per_class),
            ("test", self.spec.test_per_class),
        ] {
            for label in &self.labels {
                for index in 0..count {
                    items.push((
                        Self::image_id(label, split, index),
                        label.clone(),
                        split.to_string(),
                    ));
                }
            }
        }
        items
    }

    /// The verification oracle: evidence plus per-(image, symbol) frozen
    /// noise, clamped to [0, 1]. Unknown symbols read as absent.
    pub fn oracle_verifier(&self, image: &SynthImage, symbol: &str) -> f64 {
        let base = image.evidence.get(symbol).copied().unwrap_or(0.0);
        let sigma = self.spec.verifier_noise;
        if sigma == 0.0 {
            return base;
        }
        let mut rng = derive_rng(self.spec.seed, &["verify", &image.id, symbol]);
        (base + rng.gen_range(-sigma..=sigma)).clamp(0.0, 1.0)
    }

    /// The symbol-proposal oracle standing in for the linguistic agent.
    ///
    /// With probability η it proposes a distractor; η is the grounded rate
    /// when concept context is supplied, the ungrounded rate otherwise.
    /// Otherwise it proposes a true symbol of the class, restricted (with
    /// probability `concept_bias`) to classes consistent with the context.
    pub fn oracle_linguistic(
        &self,
        context_concepts: Option<&[String]>,
        label: &str,
        draw: u64,
    ) -> Result<String, WorldError> {
        let vocab = self.vocab(label)?;
        let context_key = context_concepts.map(|c| c.join(",")).unwrap_or_default();
        let mut rng = derive_rng(
            self.spec.seed,
            &["linguistic", label, &context_key, &draw.to_string()],
        );

        let eta = if context_concepts.is_some() {
            self.spec.hallucination_grounded
        } else {
            self.spec.hallucination_ungrounded
        };
        if rng.gen_bool(eta) {
            let i = rng.gen_range(0..self.spec.distractor_symbols.len());
            return Ok(self.spec.distractor_symbols[i].clone());
        }

        let mut candidates: Vec<&String> = vocab.iter().collect();
        if let Some(concepts) = context_concepts {
            let known: Vec<&String> = concepts
                .iter()
                .filter(|c| !self.classes_of(c).is_empty())
                .collect();
            if !known.is_empty() && rng.gen_bool(self.spec.concept_bias) {
                let consistent: Vec<&String> = self
                    .labels
                    .iter()
                    .filter(|l| {
                        known
                            .iter()
                            .all(|c| self.vocab_by_class[*l].contains(c.as_str()))
                    })
                    .collect();
                if !consistent.is_empty() {
                    let mut pool: BTreeSet<&String> = BTreeSet::new();
                    for class in consistent {
                        pool.extend(self.vocab_by_class[class].iter());
                    }
                    candidates = pool.into_iter().collect();
                }
            }
        }
        let i = rng.gen_range(0..candidates.len());
        Ok(candidates[i].clone())
    }
}
