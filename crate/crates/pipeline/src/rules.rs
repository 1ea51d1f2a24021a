use std::collections::BTreeSet;

use rand::Rng;

use crn_agents::{
    parse_entailment_choice, render_prompt, AgentHandle, PromptBindings, Stimulus, TemplateId,
    ENTAIL_TEMPERATURE,
};
use crn_rulecore::{Literal, Provenance, Rule, RuleSet, SymbolAtom};

use crate::concepts::ConceptSet;
use crate::concurrent::parallel_map;
use crate::config::{EntailmentAggregation, PipelineConfig};
use crate::error::PipelineError;
use crate::seed::derive_rng;
use crate::symbols::{SymbolOrigin, SymbolPool};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RuleFormationStats {
    pub candidates: usize,
    pub kept: usize,
    pub rejected_below_threshold: usize,
    pub rejected_ambiguous: usize,
    pub rejected_errors: usize,
}

/// Enumerates subset conjunctions of the pool (length 1..=max, lexicographic
/// over canonical symbol tuples, shorter lengths first) up to the candidate
/// budget.
fn enumerate_candidates(
    symbols: &[&SymbolAtom],
    max_len: usize,
    budget: usize,
) -> Vec<Vec<SymbolAtom>> {
    let n = symbols.len();
    let mut candidates = Vec::new();
    'lengths: for len in 1..=max_len.min(n) {
        let mut idx: Vec<usize> = (0..len).collect();
        loop {
            candidates.push(idx.iter().map(|&i| symbols[i].clone()).collect());
            if candidates.len() == budget {
                break 'lengths;
            }
            // advance to the next combination in lexicographic order
            let mut i = len as isize - 1;
            while i >= 0 && idx[i as usize] == n - len + i as usize {
                i -= 1;
            }
            if i < 0 {
                break;
            }
            let i = i as usize;
            idx[i] += 1;
            for j in i + 1..len {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    candidates
}

/// Scores every candidate conjunction with the entailment agent (at its own
/// temperature) and keeps those strictly above the threshold, sorted by
/// descending entailment then text.
pub fn form_and_filter_rules(
    label: &str,
    concepts: &ConceptSet,
    pool: &SymbolPool,
    config: &PipelineConfig,
    linguistic: &AgentHandle,
) -> Result<(Vec<Rule>, RuleFormationStats), PipelineError> {
    if pool.is_empty() {
        return Err(PipelineError::StageFailure(format!(
            "symbol pool for {label:?} is empty before rule formation"
        )));
    }
    let symbols = pool.canonical_order();
    let candidates = enumerate_candidates(&symbols, config.max_rule_len, config.candidate_budget);
    let mut stats = RuleFormationStats {
        candidates: candidates.len(),
        ..RuleFormationStats::default()
    };

    let entailer = linguistic.at_temperature(ENTAIL_TEMPERATURE);
    let stimuli: Vec<(Vec<SymbolAtom>, Vec<Stimulus>)> = candidates
        .into_iter()
        .map(|tuple| {
            let rule_text = tuple
                .iter()
                .map(|s| s.canonical())
                .collect::<Vec<_>>()
                .join(" AND ");
            let mut bindings = PromptBindings::new().label(label).rule_text(rule_text);
            if config.grounded {
                bindings = bindings.concepts(concepts.concept_texts());
            }
            let prompt = render_prompt(TemplateId::Entail, &bindings)?;
            let stimuli = (0..config.entailment_samples)
                .map(|k| Stimulus::text_only(prompt.clone()).with_sample_index(k as u32))
                .collect();
            Ok((tuple, stimuli))
        })
        .collect::<Result<_, PipelineError>>()?;

    let flat: Vec<&Stimulus> = stimuli.iter().flat_map(|(_, s)| s.iter()).collect();
    let replies = parallel_map(&flat, config.max_in_flight, |_, stimulus| {
        entailer.complete("", stimulus)
    });

    let mut kept = Vec::new();
    let mut reply_iter = replies.into_iter();
    for (tuple, per_candidate) in &stimuli {
        let mut sample_scores = Vec::new();
        let mut ambiguous = false;
        let mut errored = false;
        for _ in per_candidate {
            match reply_iter.next().expect("one reply per stimulus") {
                Ok(reply) => match parse_entailment_choice(&reply.text) {
                    Ok(score) => sample_scores.push(score),
                    Err(err) => {
                        ambiguous = true;
                        log::debug!("entailment reply rejected for {label:?}: {err}");
                    }
                },
                Err(err) => {
                    errored = true;
                    log::warn!("entailment call failed for {label:?}: {err}");
                }
            }
        }
        if sample_scores.is_empty() {
            if ambiguous {
                stats.rejected_ambiguous += 1;
            } else if errored {
                stats.rejected_errors += 1;
            }
            continue;
        }
        let score = match config.entailment_aggregation {
            EntailmentAggregation::Single => sample_scores[0],
            EntailmentAggregation::Max => {
                sample_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            EntailmentAggregation::Mean => {
                sample_scores.iter().sum::<f64>() / sample_scores.len() as f64
            }
        };
        if score > config.entailment_threshold {
            let groups = tuple
                .iter()
                .map(|s| vec![Literal::positive(s.clone())])
                .collect();
            let provenance = if tuple
                .iter()
                .all(|s| pool.origin_of(s) == Some(SymbolOrigin::Initial))
            {
                Provenance::Initial
            } else {
                Provenance::Explored
            };
            let rule = Rule::with_max_groups(label, groups, config.max_rule_len)?
                .with_entailment(score)
                .with_provenance(provenance);
            kept.push(rule);
        } else {
            stats.rejected_below_threshold += 1;
        }
    }

    kept.sort_by(|a, b| {
        b.entailment
            .partial_cmp(&a.entailment)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.text().cmp(&b.text()))
    });
    stats.kept = kept.len();
    Ok((kept, stats))
}

/// Rewrites each single-literal group `[s]` as `[(NOT s̃ OR s)]`, drawing s̃
/// uniformly (seeded) from the union of the other classes' rule symbols,
/// never reusing a symbol already in the rule. The original rules are
/// retained alongside; rules with no foreign symbols available are left
/// unchanged with a warning. Returns the augmented set and the warning count.
pub fn augment_counterfactual(
    ruleset: &RuleSet,
    seed: u64,
) -> Result<(RuleSet, usize), PipelineError> {
    let labels = ruleset.labels().to_vec();
    if labels.len() < 2 {
        log::warn!("counterfactual augmentation needs at least two classes; leaving rules unchanged");
        return Ok((ruleset.clone(), 1));
    }

    let mut rng = derive_rng(seed, &["counterfactual"]);
    let mut warnings = 0usize;
    let mut rules: Vec<Rule> = ruleset.rules().cloned().collect();

    for label in &labels {
        let mut foreign: BTreeSet<SymbolAtom> = BTreeSet::new();
        for other in &labels {
            if other != label {
                foreign.extend(ruleset.class_symbols(other));
            }
        }
        let foreign: Vec<SymbolAtom> = foreign.into_iter().collect();

        for rule in ruleset.rules_for(label) {
            let mut used: BTreeSet<String> = rule
                .symbols()
                .iter()
                .map(|s| s.canonical().to_string())
                .collect();
            let mut groups = Vec::with_capacity(rule.groups.len());
            let mut gave_up = false;
            for group in &rule.groups {
                if group.len() != 1 {
                    groups.push(group.clone());
                    continue;
                }
                let available: Vec<&SymbolAtom> = foreign
                    .iter()
                    .filter(|s| !used.contains(s.canonical()))
                    .collect();
                if available.is_empty() {
                    gave_up = true;
                    break;
                }
                let pick = available[rng.gen_range(0..available.len())].clone();
                used.insert(pick.canonical().to_string());
                groups.push(vec![Literal::negative(pick), group[0].clone()]);
            }
            if gave_up {
                warnings += 1;
                log::warn!(
                    "no foreign symbols available to augment rule {:?}; leaving it unchanged",
                    rule.text()
                );
                continue;
            }
            let mut augmented = Rule::with_max_groups(&rule.label, groups, rule.groups.len())?
                .with_provenance(Provenance::Counterfactual);
            augmented.entailment = rule.entailment;
            rules.push(augmented);
        }
    }

    let augmented = RuleSet::new(ruleset.dataset(), labels, rules)?;
    Ok((augmented, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crn_agents::{AgentEndpoint, AgentReply, AgentRole, RetryPolicy, TranscriptTransport};
    use crn_rulecore::{canonicalize, parse_rule};
    use std::sync::Arc;

    fn handle(transport: Arc<TranscriptTransport>) -> AgentHandle {
        AgentHandle::new(
            AgentEndpoint::new(AgentRole::Linguistic, "mock", "m"),
            transport,
        )
        .with_retry(RetryPolicy::none())
    }

    fn pool(label: &str, names: &[&str]) -> SymbolPool {
        let mut pool = SymbolPool::new(label);
        for n in names {
            pool.insert(canonicalize(n).unwrap(), SymbolOrigin::Initial);
        }
        pool
    }

    fn concepts(label: &str) -> ConceptSet {
        ConceptSet {
            label: label.into(),
            concepts: vec![canonicalize("ctx").unwrap()],
            source_image_ids: vec![],
        }
    }

    #[test]
    fn pool_of_three_enumerates_seven_candidates() {
        let transport =
            Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("(A)")));
        let cfg = PipelineConfig::default();
        let (_, stats) =
            form_and_filter_rules("y", &concepts("y"), &pool("y", &["a", "b", "c"]), &cfg, &handle(transport))
                .unwrap();
        assert_eq!(stats.candidates, 7);
    }

    #[test]
    fn budget_caps_enumeration() {
        let transport =
            Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("(A)")));
        let cfg = PipelineConfig {
            candidate_budget: 4,
            ..PipelineConfig::default()
        };
        let (_, stats) =
            form_and_filter_rules("y", &concepts("y"), &pool("y", &["a", "b", "c"]), &cfg, &handle(transport))
                .unwrap();
        assert_eq!(stats.candidates, 4);
    }

    #[test]
    fn scores_above_threshold_are_kept_with_entailment() {
        let transport =
            Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("(D)")));
        let cfg = PipelineConfig::default();
        let (rules, stats) =
            form_and_filter_rules("y", &concepts("y"), &pool("y", &["a"]), &cfg, &handle(transport))
                .unwrap();
        assert_eq!(stats.kept, 1);
        assert_eq!(rules[0].entailment, Some(0.9));
        assert_eq!(rules[0].text(), "y :- a");
        assert_eq!(rules[0].provenance, Provenance::Initial);
    }

    #[test]
    fn boundary_score_is_rejected_strictly() {
        // ε = 0.7 and the reply is (C) = 0.7: strictly-greater keeps it out
        let transport =
            Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("(C)")));
        let cfg = PipelineConfig::default();
        let (rules, stats) =
            form_and_filter_rules("y", &concepts("y"), &pool("y", &["a"]), &cfg, &handle(transport))
                .unwrap();
        assert!(rules.is_empty());
        assert_eq!(stats.rejected_below_threshold, 1);
    }

    #[test]
    fn ambiguous_replies_reject_the_candidate() {
        let transport =
            Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("maybe B or D")));
        let cfg = PipelineConfig::default();
        let (rules, stats) =
            form_and_filter_rules("y", &concepts("y"), &pool("y", &["a"]), &cfg, &handle(transport))
                .unwrap();
        assert!(rules.is_empty());
        assert_eq!(stats.rejected_ambiguous, 1);
    }

    #[test]
    fn entailment_calls_run_at_temperature_zero() {
        let transport =
            Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("(D)")));
        let h = handle(transport.clone());
        assert_eq!(h.endpoint.temperature, 0.7);
        let cfg = PipelineConfig::default();
        form_and_filter_rules("y", &concepts("y"), &pool("y", &["a"]), &cfg, &h).unwrap();
        // the entailment variant shares the call counter
        assert_eq!(h.calls(), 1);
    }

    #[test]
    fn explored_symbols_mark_rule_provenance() {
        let transport =
            Arc::new(TranscriptTransport::new().with_default(AgentReply::text_only("(D)")));
        let mut p = SymbolPool::new("y");
        p.insert(canonicalize("a").unwrap(), SymbolOrigin::Initial);
        p.insert(canonicalize("b").unwrap(), SymbolOrigin::Explored);
        let cfg = PipelineConfig {
            max_rule_len: 2,
            ..PipelineConfig::default()
        };
        let (rules, _) =
            form_and_filter_rules("y", &concepts("y"), &p, &cfg, &handle(transport)).unwrap();
        let ab = rules.iter().find(|r| r.text() == "y :- a AND b").unwrap();
        assert_eq!(ab.provenance, Provenance::Explored);
        let a = rules.iter().find(|r| r.text() == "y :- a").unwrap();
        assert_eq!(a.provenance, Provenance::Initial);
    }

    fn two_class_set() -> RuleSet {
        let rules = vec![
            parse_rule("basophil :- lobed nucleus AND dark granules")
                .unwrap()
                .with_entailment(0.9),
            parse_rule("lymphocyte :- nucleus is round and central")
                .unwrap()
                .with_entailment(0.9),
        ];
        RuleSet::new(
            "blood",
            vec!["basophil".into(), "lymphocyte".into()],
            rules,
        )
        .unwrap()
    }

    #[test]
    fn single_class_set_is_unchanged_with_warning() {
        let rules = vec![parse_rule("y :- a").unwrap()];
        let set = RuleSet::new("d", vec!["y".into()], rules).unwrap();
        let (augmented, warnings) = augment_counterfactual(&set, 7).unwrap();
        assert_eq!(augmented, set);
        assert_eq!(warnings, 1);
    }

    #[test]
    fn groups_gain_negated_foreign_disjuncts() {
        let set = two_class_set();
        let (augmented, warnings) = augment_counterfactual(&set, 7).unwrap();
        assert_eq!(warnings, 0);
        // originals retained
        for rule in set.rules() {
            assert!(
                augmented.rules().any(|r| r.same_structure(rule)),
                "missing original {}",
                rule.text()
            );
        }
        let basophil_cf: Vec<_> = augmented
            .rules_for("basophil")
            .iter()
            .filter(|r| r.provenance == Provenance::Counterfactual)
            .collect();
        assert_eq!(basophil_cf.len(), 1);
        let cf = basophil_cf[0];
        assert_eq!(cf.groups.len(), 2);
        for group in &cf.groups {
            assert_eq!(group.len(), 2);
            assert!(group[0].negated);
            assert_eq!(group[0].symbol.canonical(), "nucleus is round and central");
            assert!(!group[1].negated);
        }
        assert_eq!(cf.entailment, Some(0.9));
    }

    #[test]
    fn augmentation_is_deterministic_given_seed() {
        let set = two_class_set();
        let a = augment_counterfactual(&set, 42).unwrap().0;
        let b = augment_counterfactual(&set, 42).unwrap().0;
        assert_eq!(a, b);
    }

    #[test]
    fn counterfactual_draws_exclude_rule_symbols() {
        // the only foreign symbol of "z" is also in the rule: nothing to draw
        let rules = vec![
            parse_rule("y :- shared thing").unwrap(),
            parse_rule("z :- shared thing").unwrap(),
        ];
        let set = RuleSet::new("d", vec!["y".into(), "z".into()], rules).unwrap();
        let (augmented, warnings) = augment_counterfactual(&set, 7).unwrap();
        assert_eq!(warnings, 2);
        assert_eq!(augmented.rule_count(), 2);
    }
}
