use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crn_agents::{render_prompt, score_yes_no, AgentHandle, PromptBindings, TemplateId};
use crn_rulecore::{eval_class_detailed, RuleSet, ScoreTable};

use crate::concurrent::parallel_map;
use crate::error::PipelineError;
use crate::manifest::{Manifest, Split, VisualInput};

/// Per-image verification output: the symbol score table, the per-class rule
/// scores, and the winning rule text per label.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub scores: ScoreTable,
    pub class_scores: Vec<f64>,
    pub winning_rules: BTreeMap<String, Option<String>>,
    pub degraded_symbols: usize,
    pub queried_symbols: usize,
}

/// Scores every distinct rule symbol on one image (one verifier call per
/// canonical symbol, issued concurrently, results in canonical order) and
/// evaluates the rule set on the resulting table.
///
/// Unusable verifier replies score 0.5 and count as degraded; more than half
/// degraded fails verification.
pub fn verify_image(
    visual: &VisualInput,
    ruleset: &RuleSet,
    verifier: &AgentHandle,
    task_name: &str,
    max_in_flight: usize,
) -> Result<VerifyOutcome, PipelineError> {
    let symbols = ruleset.distinct_symbols();
    if symbols.is_empty() {
        return Err(PipelineError::VerificationFailure(
            "rule set has no symbols to verify".to_string(),
        ));
    }

    let stimuli: Vec<_> = symbols
        .iter()
        .map(|symbol| {
            let prompt = render_prompt(
                TemplateId::Verify,
                &PromptBindings::new().task(task_name).symbol(symbol.canonical()),
            )?;
            Ok(visual.stimulus(prompt))
        })
        .collect::<Result<_, PipelineError>>()?;

    let replies = parallel_map(&stimuli, max_in_flight, |_, stimulus| {
        verifier.complete("", stimulus)
    });

    let mut scores = ScoreTable::new();
    let mut degraded = 0usize;
    for (symbol, reply) in symbols.iter().zip(replies) {
        let value = match reply {
            Ok(reply) => match score_yes_no(&reply) {
                Ok(score) => {
                    if score.degraded {
                        degraded += 1;
                    }
                    score.probability
                }
                Err(_) => {
                    degraded += 1;
                    0.5
                }
            },
            Err(err) => {
                return Err(PipelineError::VerificationFailure(format!(
                    "verifier call failed for {:?}: {err}",
                    symbol.canonical()
                )))
            }
        };
        scores.insert(symbol, value)?;
    }

    if degraded * 2 > symbols.len() {
        return Err(PipelineError::VerificationFailure(format!(
            "{degraded} of {} verifier replies were degraded",
            symbols.len()
        )));
    }

    let mut class_scores = Vec::with_capacity(ruleset.labels().len());
    let mut winning_rules = BTreeMap::new();
    for label in ruleset.labels() {
        let detailed = eval_class_detailed(ruleset, label, &scores)?;
        class_scores.push(detailed.score);
        let text = detailed
            .best_rule
            .map(|i| ruleset.rules_for(label)[i].text());
        winning_rules.insert(label.clone(), text);
    }

    Ok(VerifyOutcome {
        scores,
        class_scores,
        winning_rules,
        degraded_symbols: degraded,
        queried_symbols: symbols.len(),
    })
}

/// Probes the system-1 endpoint once per label with the yes/no template on
/// the class name, then L1-normalizes the yes-probabilities.
pub fn classify_system1(
    visual: &VisualInput,
    labels: &[String],
    system1: &AgentHandle,
    task_name: &str,
    max_in_flight: usize,
) -> Result<Vec<f64>, PipelineError> {
    if labels.len() < 2 {
        return Err(PipelineError::InvalidConfig(
            "system-1 classification needs at least two labels".to_string(),
        ));
    }
    let stimuli: Vec<_> = labels
        .iter()
        .map(|label| {
            let prompt = render_prompt(
                TemplateId::Verify,
                &PromptBindings::new().task(task_name).symbol(label),
            )?;
            Ok(visual.stimulus(prompt))
        })
        .collect::<Result<_, PipelineError>>()?;

    let replies = parallel_map(&stimuli, max_in_flight, |_, stimulus| {
        system1.complete("", stimulus)
    });

    let mut yes = Vec::with_capacity(labels.len());
    let mut degraded = 0usize;
    for (label, reply) in labels.iter().zip(replies) {
        match reply {
            Ok(reply) => match score_yes_no(&reply) {
                Ok(score) => {
                    if score.degraded {
                        degraded += 1;
                    }
                    yes.push(score.probability);
                }
                Err(_) => {
                    degraded += 1;
                    yes.push(0.5);
                }
            },
            Err(err) => {
                return Err(PipelineError::VerificationFailure(format!(
                    "system-1 probe failed for {label:?}: {err}"
                )))
            }
        }
    }
    if degraded * 2 > labels.len() {
        return Err(PipelineError::VerificationFailure(format!(
            "{degraded} of {} system-1 probes were degraded",
            labels.len()
        )));
    }

    let total: f64 = yes.iter().sum();
    if total <= 0.0 {
        log::warn!("system-1 probes all scored zero; falling back to uniform");
        return Ok(vec![1.0 / labels.len() as f64; labels.len()]);
    }
    Ok(yes.into_iter().map(|p| p / total).collect())
}

/// One fused prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub s1: Vec<f64>,
    pub s2: Vec<f64>,
    pub fused: Vec<f64>,
    pub argmax: String,
    pub winning_rules: BTreeMap<String, Option<String>>,
}

/// Convex fusion `(1-λ)·s1 + λ·s2` with a lexicographic tie-break on the
/// argmax label. `s1` must be a probability vector (sums to 1 within 1e-6).
pub fn fuse(
    s1: &[f64],
    s2: &[f64],
    lambda: f64,
    labels: &[String],
) -> Result<Prediction, PipelineError> {
    if s1.len() != s2.len() {
        return Err(PipelineError::LengthMismatch {
            left: s1.len(),
            right: s2.len(),
        });
    }
    if s1.len() != labels.len() {
        return Err(PipelineError::LengthMismatch {
            left: s1.len(),
            right: labels.len(),
        });
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(PipelineError::InvalidConfig(format!(
            "fusion weight {lambda} outside [0, 1]"
        )));
    }
    let sum: f64 = s1.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(PipelineError::InvalidConfig(format!(
            "system-1 vector sums to {sum}, expected 1"
        )));
    }

    let fused: Vec<f64> = s1
        .iter()
        .zip(s2)
        .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
        .collect();
    let mut best = 0usize;
    for i in 1..fused.len() {
        if fused[i] > fused[best] || (fused[i] == fused[best] && labels[i] < labels[best]) {
            best = i;
        }
    }
    Ok(Prediction {
        s1: s1.to_vec(),
        s2: s2.to_vec(),
        fused,
        argmax: labels[best].clone(),
        winning_rules: BTreeMap::new(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InferStats {
    pub items: usize,
    pub degraded_symbols: usize,
    pub verifier_symbols: usize,
}

/// Runs verification, the system-1 probe, and fusion over a whole split.
/// Items are processed in id order; returns (item id, true label, prediction)
/// triples plus counters.
pub fn infer_split(
    manifest: &Manifest,
    split: Split,
    ruleset: &RuleSet,
    lambda: f64,
    verifier: &AgentHandle,
    system1: &AgentHandle,
    max_in_flight: usize,
) -> Result<(Vec<(String, String, Prediction)>, InferStats), PipelineError> {
    let items = manifest.split_items(split);
    if items.is_empty() {
        return Err(PipelineError::StageFailure(format!(
            "split {split} has no items"
        )));
    }
    let mut out = Vec::with_capacity(items.len());
    let mut stats = InferStats::default();
    for item in items {
        let visual = item.visual();
        let verify = verify_image(&visual, ruleset, verifier, &manifest.task, max_in_flight)?;
        let s1 = classify_system1(&visual, ruleset.labels(), system1, &manifest.task, max_in_flight)?;
        let mut prediction = fuse(&s1, &verify.class_scores, lambda, ruleset.labels())?;
        prediction.winning_rules = verify.winning_rules;
        stats.items += 1;
        stats.degraded_symbols += verify.degraded_symbols;
        stats.verifier_symbols += verify.queried_symbols;
        out.push((item.id.clone(), item.label.clone(), prediction));
    }
    Ok((out, stats))
}
