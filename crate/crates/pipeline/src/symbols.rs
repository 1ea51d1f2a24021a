use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crn_agents::{
    parse_concept_list, render_prompt, AgentHandle, PromptBindings, Stimulus, TemplateId,
};
use crn_rulecore::SymbolAtom;

use crate::concepts::ConceptSet;
use crate::concurrent::parallel_map;
use crate::config::PipelineConfig;
use crate::error::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolOrigin {
    Initial,
    Explored,
}

/// The explored symbol pool of one class: insertion-ordered, deduplicated by
/// canonical form, each symbol tagged with its origin.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolPool {
    pub label: String,
    entries: Vec<(SymbolAtom, SymbolOrigin)>,
}

impl SymbolPool {
    pub fn new(label: impl Into<String>) -> Self {
        SymbolPool {
            label: label.into(),
            entries: Vec::new(),
        }
    }

    /// Inserts unless the canonical form is already present.
    pub fn insert(&mut self, symbol: SymbolAtom, origin: SymbolOrigin) -> bool {
        if self.contains(&symbol) {
            return false;
        }
        self.entries.push((symbol, origin));
        true
    }

    pub fn contains(&self, symbol: &SymbolAtom) -> bool {
        self.entries.iter().any(|(s, _)| s == symbol)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &(SymbolAtom, SymbolOrigin)> {
        self.entries.iter()
    }

    pub fn origin_of(&self, symbol: &SymbolAtom) -> Option<SymbolOrigin> {
        self.entries
            .iter()
            .find(|(s, _)| s == symbol)
            .map(|(_, o)| *o)
    }

    /// Symbols sorted by canonical text.
    pub fn canonical_order(&self) -> Vec<&SymbolAtom> {
        let sorted: BTreeMap<&str, &SymbolAtom> = self
            .entries
            .iter()
            .map(|(s, _)| (s.canonical(), s))
            .collect();
        sorted.into_values().collect()
    }

    pub fn initial_count(&self) -> usize {
        self.entries
            .iter()
            .filter(|(_, o)| *o == SymbolOrigin::Initial)
            .count()
    }
}

/// Initializes the class's symbol pool from the label alone: one agent call,
/// at most K symbols, marked initial.
pub fn init_symbols(
    label: &str,
    config: &PipelineConfig,
    linguistic: &AgentHandle,
) -> Result<SymbolPool, PipelineError> {
    let prompt = render_prompt(
        TemplateId::InitSymbols,
        &PromptBindings::new()
            .label(label)
            .symbol_count(config.initial_symbols),
    )?;
    let reply = linguistic.complete("", &Stimulus::text_only(prompt))?;
    let symbols = parse_concept_list(&reply.text, config.initial_symbols).map_err(|e| {
        PipelineError::StageFailure(format!("symbol initialization for {label:?} failed: {e}"))
    })?;
    let mut pool = SymbolPool::new(label);
    for symbol in symbols {
        pool.insert(symbol, SymbolOrigin::Initial);
    }
    Ok(pool)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExploreStats {
    pub rounds: usize,
    pub proposals: usize,
    pub unparseable: usize,
    pub duplicates: usize,
}

/// Runs the exploration rounds. Each round walks the round-start pool in
/// canonical order, asks for one condition symbol per pool symbol, and
/// unions the parses back into the pool. The grounding context rides in the
/// prompt iff `config.grounded`.
pub fn explore(
    label: &str,
    concepts: &ConceptSet,
    mut pool: SymbolPool,
    config: &PipelineConfig,
    linguistic: &AgentHandle,
) -> Result<(SymbolPool, ExploreStats), PipelineError> {
    if pool.is_empty() {
        return Err(PipelineError::StageFailure(format!(
            "symbol pool for {label:?} is empty before exploration"
        )));
    }
    let mut stats = ExploreStats::default();
    for round in 0..config.exploration_iterations {
        let snapshot: Vec<SymbolAtom> =
            pool.canonical_order().into_iter().cloned().collect();
        let stimuli: Vec<Stimulus> = snapshot
            .iter()
            .map(|symbol| {
                let mut bindings = PromptBindings::new()
                    .label(label)
                    .symbol(symbol.canonical());
                if config.grounded {
                    bindings = bindings.concepts(concepts.concept_texts());
                }
                Ok(Stimulus::text_only(render_prompt(TemplateId::Explore, &bindings)?)
                    .with_sample_index(round as u32))
            })
            .collect::<Result<_, PipelineError>>()?;

        let replies = parallel_map(&stimuli, config.max_in_flight, |_, stimulus| {
            linguistic.complete("", stimulus)
        });

        let mut round_failures = 0usize;
        for reply in replies {
            stats.proposals += 1;
            match reply.and_then(|r| parse_concept_list(&r.text, 1)) {
                Ok(parsed) => {
                    let symbol = parsed.into_iter().next().expect("one item");
                    if !pool.insert(symbol, SymbolOrigin::Explored) {
                        stats.duplicates += 1;
                    }
                }
                Err(err) => {
                    stats.unparseable += 1;
                    round_failures += 1;
                    log::warn!("exploration reply unusable for {label:?}: {err}");
                }
            }
        }
        if !snapshot.is_empty() && round_failures == snapshot.len() {
            return Err(PipelineError::StageFailure(format!(
                "all {round_failures} exploration replies failed in round {round} for {label:?}"
            )));
        }
        stats.rounds += 1;
    }
    Ok((pool, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crn_agents::{AgentEndpoint, AgentReply, AgentRole, RetryPolicy, TranscriptTransport};
    use crn_rulecore::canonicalize;
    use std::sync::Arc;

    fn handle(transport: Arc<TranscriptTransport>) -> AgentHandle {
        AgentHandle::new(
            AgentEndpoint::new(AgentRole::Linguistic, "mock", "m"),
            transport,
        )
        .with_retry(RetryPolicy::none())
    }

    fn concept_set(label: &str, names: &[&str]) -> ConceptSet {
        ConceptSet {
            label: label.into(),
            concepts: names.iter().map(|n| canonicalize(n).unwrap()).collect(),
            source_image_ids: vec![],
        }
    }

    fn cfg() -> PipelineConfig {
        PipelineConfig {
            exploration_iterations: 1,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn init_builds_a_pool_of_k() {
        let transport = Arc::new(TranscriptTransport::new());
        transport.add_text(
            "In a picture, we see basophil. List 5 entities that can be seen that verify basophil.",
            "1. lobed nucleus\n2. dark granules\n3. pale halo\n4. round cell\n5. purple stain",
        );
        let pool = init_symbols("basophil", &cfg(), &handle(transport)).unwrap();
        assert_eq!(pool.len(), 5);
        assert_eq!(pool.initial_count(), 5);
    }

    #[test]
    fn init_deduplicates_replies() {
        let transport = Arc::new(TranscriptTransport::new());
        transport.add_text(
            "In a picture, we see basophil. List 5 entities that can be seen that verify basophil.",
            "1. granule\n2. The Granule\n3. granule.",
        );
        let pool = init_symbols("basophil", &cfg(), &handle(transport)).unwrap();
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn init_k1_gives_single_symbol_pool() {
        let transport = Arc::new(TranscriptTransport::new());
        transport.add_text(
            "In a picture, we see basophil. List 1 entities that can be seen that verify basophil.",
            "1. lobed nucleus\n2. extra",
        );
        let config = PipelineConfig {
            initial_symbols: 1,
            ..cfg()
        };
        let pool = init_symbols("basophil", &config, &handle(transport)).unwrap();
        assert_eq!(pool.len(), 1);
    }

    #[test]
    fn init_refusal_is_stage_failure() {
        let transport = Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only(
            "I cannot see the image.",
        )));
        let err = init_symbols("basophil", &cfg(), &handle(transport)).unwrap_err();
        assert!(matches!(err, PipelineError::StageFailure(_)));
    }

    #[test]
    fn explore_unions_new_symbols() {
        let transport = Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("b")));
        let mut pool = SymbolPool::new("y");
        pool.insert(canonicalize("a").unwrap(), SymbolOrigin::Initial);
        let (pool, stats) =
            explore("y", &concept_set("y", &["ctx"]), pool, &cfg(), &handle(transport)).unwrap();
        assert_eq!(pool.len(), 2);
        assert!(pool.contains(&canonicalize("b").unwrap()));
        assert_eq!(
            pool.origin_of(&canonicalize("b").unwrap()),
            Some(SymbolOrigin::Explored)
        );
        assert_eq!(stats.proposals, 1);
    }

    #[test]
    fn grounded_flag_controls_the_prompt_prefix() {
        for grounded in [true, false] {
            let transport =
                Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("b")));
            let mut pool = SymbolPool::new("y");
            pool.insert(canonicalize("a").unwrap(), SymbolOrigin::Initial);
            let config = PipelineConfig {
                grounded,
                ..cfg()
            };
            let h = handle(transport.clone());
            explore("y", &concept_set("y", &["ctx"]), pool, &config, &h).unwrap();
            let prompts = transport.prompts();
            assert_eq!(prompts.len(), 1);
            assert_eq!(
                prompts[0].contains("we generally observe"),
                grounded,
                "grounded={grounded} prompt={:?}",
                prompts[0]
            );
        }
    }

    #[test]
    fn all_replies_failing_in_a_round_is_stage_failure() {
        let transport = Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only(
            "I'm sorry, I cannot help.",
        )));
        let mut pool = SymbolPool::new("y");
        pool.insert(canonicalize("a").unwrap(), SymbolOrigin::Initial);
        let err = explore(
            "y",
            &concept_set("y", &["ctx"]),
            pool,
            &cfg(),
            &handle(transport),
        )
        .unwrap_err();
        assert!(matches!(err, PipelineError::StageFailure(_)));
    }

    #[test]
    fn rounds_walk_the_pool_in_canonical_order() {
        let transport = Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("z")));
        let mut pool = SymbolPool::new("y");
        pool.insert(canonicalize("m").unwrap(), SymbolOrigin::Initial);
        pool.insert(canonicalize("b").unwrap(), SymbolOrigin::Initial);
        let config = PipelineConfig {
            grounded: false,
            ..cfg()
        };
        explore("y", &concept_set("y", &[]), pool, &config, &handle(transport.clone())).unwrap();
        let prompts = transport.prompts();
        assert_eq!(prompts.len(), 2);
        assert!(prompts[0].contains("if b AND"));
        assert!(prompts[1].contains("if m AND"));
    }
}
