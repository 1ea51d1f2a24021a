use std::collections::BTreeSet;

use rand::seq::SliceRandom;

use crn_agents::{parse_concept_list, render_prompt, AgentHandle, PromptBindings, TemplateId};
use crn_rulecore::SymbolAtom;

use crate::concurrent::parallel_map;
use crate::config::PipelineConfig;
use crate::error::PipelineError;
use crate::manifest::{Manifest, Split};
use crate::seed::derive_rng;

/// Stage-1 output for one class: the deduplicated union of per-image
/// concepts, in discovery order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConceptSet {
    pub label: String,
    pub concepts: Vec<SymbolAtom>,
    pub source_image_ids: Vec<String>,
}

impl ConceptSet {
    pub fn concept_texts(&self) -> Vec<String> {
        self.concepts.iter().map(|c| c.canonical().to_string()).collect()
    }
}

/// Samples up to `images_per_class` training images of the class (seeded),
/// extracts up to M concepts from each, and unions them discarding
/// duplicates. Per-image failures are logged and skipped; more than half
/// failing fails the stage.
pub fn extract_concepts(
    manifest: &Manifest,
    label: &str,
    config: &PipelineConfig,
    visual: &AgentHandle,
) -> Result<ConceptSet, PipelineError> {
    let mut items = manifest.items_for(label, Split::Train);
    if items.is_empty() {
        return Err(PipelineError::StageFailure(format!(
            "no training items for label {label:?}"
        )));
    }
    let mut rng = derive_rng(config.seed, &["stage1-sample", label]);
    items.shuffle(&mut rng);
    items.truncate(config.images_per_class);

    let prompt = render_prompt(
        TemplateId::Concept,
        &PromptBindings::new()
            .label(label)
            .concept_count(config.concepts_per_image),
    )?;

    let replies = parallel_map(&items, config.max_in_flight, |_, item| {
        visual.complete("", &item.visual().stimulus(&prompt))
    });

    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut concepts = Vec::new();
    let mut source_image_ids = Vec::new();
    let mut failed = 0usize;
    for (item, reply) in items.iter().zip(replies) {
        let parsed = reply.and_then(|r| parse_concept_list(&r.text, config.concepts_per_image));
        match parsed {
            Ok(list) => {
                source_image_ids.push(item.id.clone());
                for concept in list {
                    if seen.insert(concept.canonical().to_string()) {
                        concepts.push(concept);
                    }
                }
            }
            Err(err) => {
                failed += 1;
                log::warn!("concept extraction failed for {}: {err}", item.id);
            }
        }
    }

    if failed * 2 > items.len() {
        return Err(PipelineError::StageFailure(format!(
            "{failed} of {} concept extractions failed for {label:?}",
            items.len()
        )));
    }
    if concepts.is_empty() {
        return Err(PipelineError::StageFailure(format!(
            "no concepts extracted for {label:?}"
        )));
    }
    Ok(ConceptSet {
        label: label.to_string(),
        concepts,
        source_image_ids,
    })
}
