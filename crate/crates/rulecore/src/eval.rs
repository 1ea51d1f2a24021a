use crate::error::RuleError;
use crate::rule::Rule;
use crate::ruleset::RuleSet;
use crate::scores::ScoreTable;

/// Fuzzy evaluation of one rule: literal is `p` (or `1 - p` when negated),
/// group is the max over its literals, rule is the min over its groups.
pub fn eval_rule(rule: &Rule, scores: &ScoreTable) -> Result<f64, RuleError> {
    let mut rule_value = 1.0_f64;
    for group in &rule.groups {
        let mut group_value = 0.0_f64;
        for literal in group {
            let p = scores.get(&literal.symbol)?;
            let v = if literal.negated { 1.0 - p } else { p };
            group_value = group_value.max(v);
        }
        rule_value = rule_value.min(group_value);
    }
    Ok(rule_value)
}

/// A class score together with the rule that achieved it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassScore {
    pub score: f64,
    /// Index into the class's rules (in rule-set order); None when the class
    /// has no rules.
    pub best_rule: Option<usize>,
}

/// Max of [`eval_rule`] over the class's rules.
///
/// A class with zero rules scores 0 and emits a warning.
pub fn eval_class(ruleset: &RuleSet, label: &str, scores: &ScoreTable) -> Result<f64, RuleError> {
    eval_class_detailed(ruleset, label, scores).map(|c| c.score)
}

/// Like [`eval_class`] but also reports which rule won.
pub fn eval_class_detailed(
    ruleset: &RuleSet,
    label: &str,
    scores: &ScoreTable,
) -> Result<ClassScore, RuleError> {
    if !ruleset.labels().iter().any(|l| l == label) {
        return Err(RuleError::UnknownLabel {
            label: label.to_string(),
        });
    }
    let rules = ruleset.rules_for(label);
    if rules.is_empty() {
        log::warn!("class {label:?} has no rules; scoring 0");
        return Ok(ClassScore {
            score: 0.0,
            best_rule: None,
        });
    }
    let mut best = ClassScore {
        score: 0.0,
        best_rule: None,
    };
    for (i, rule) in rules.iter().enumerate() {
        let value = eval_rule(rule, scores)?;
        if best.best_rule.is_none() || value > best.score {
            best = ClassScore {
                score: value,
                best_rule: Some(i),
            };
        }
    }
    Ok(best)
}

/// Applies [`eval_class`] to every label, in label order. Raw, unnormalized.
pub fn system2_vector(ruleset: &RuleSet, scores: &ScoreTable) -> Result<Vec<f64>, RuleError> {
    system2_vector_opts(ruleset, scores, false)
}

/// [`system2_vector`] with an optional L1 normalization of the result.
pub fn system2_vector_opts(
    ruleset: &RuleSet,
    scores: &ScoreTable,
    l1_normalize: bool,
) -> Result<Vec<f64>, RuleError> {
    let mut out = Vec::with_capacity(ruleset.labels().len());
    for label in ruleset.labels() {
        out.push(eval_class(ruleset, label, scores)?);
    }
    if l1_normalize {
        let total: f64 = out.iter().sum();
        if total > 0.0 {
            for v in &mut out {
                *v /= total;
            }
        }
    }
    Ok(out)
}
