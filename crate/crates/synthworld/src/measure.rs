use crn_rulecore::RuleSet;

use crate::spec::WorldError;
use crate::world::World;

/// Fraction of literal occurrences across all rules whose symbol is not in
/// the true vocabulary of the rule's class. Shared-pool symbols count as
/// true; every literal counts once, negated or not.
pub fn hallucination_rate(ruleset: &RuleSet, world: &World) -> Result<f64, WorldError> {
    let mut total = 0usize;
    let mut hallucinated = 0usize;
    for rule in ruleset.rules() {
        let vocab = world.vocab(&rule.label)?;
        for group in &rule.groups {
            for literal in group {
                total += 1;
                if !vocab.contains(literal.symbol.canonical()) {
                    hallucinated += 1;
                }
            }
        }
    }
    if total == 0 {
        return Err(WorldError::EmptyRuleSet);
    }
    Ok(hallucinated as f64 / total as f64)
}
