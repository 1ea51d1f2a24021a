use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::RuleError;
use crate::rule::{Literal, Provenance, Rule};
use crate::symbol::{canonicalize, SymbolAtom};

/// All rules for one dataset, grouped by class label.
///
/// Rules within a class are kept in descending entailment order, ties broken
/// by rule text, so serialization is deterministic.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    dataset: String,
    labels: Vec<String>,
    by_label: BTreeMap<String, Vec<Rule>>,
}

fn rule_sort_key(rule: &Rule) -> (std::cmp::Reverse<ordered::Entailment>, String) {
    (
        std::cmp::Reverse(ordered::Entailment(rule.entailment)),
        rule.text(),
    )
}

mod ordered {
    /// Entailment ordering with unset scores sorting below every set score.
    #[derive(PartialEq)]
    pub struct Entailment(pub Option<f64>);

    impl Eq for Entailment {}

    impl PartialOrd for Entailment {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }

    impl Ord for Entailment {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            match (self.0, other.0) {
                (Some(a), Some(b)) => a.total_cmp(&b),
                (Some(_), None) => std::cmp::Ordering::Greater,
                (None, Some(_)) => std::cmp::Ordering::Less,
                (None, None) => std::cmp::Ordering::Equal,
            }
        }
    }
}

impl RuleSet {
    pub fn new(
        dataset: impl Into<String>,
        labels: Vec<String>,
        rules: Vec<Rule>,
    ) -> Result<Self, RuleError> {
        let labels_set: BTreeSet<&String> = labels.iter().collect();
        let mut by_label: BTreeMap<String, Vec<Rule>> = BTreeMap::new();
        for label in &labels {
            by_label.entry(label.clone()).or_default();
        }
        for rule in rules {
            if !labels_set.contains(&rule.label) {
                return Err(RuleError::LabelNotListed {
                    label: rule.label.clone(),
                });
            }
            by_label.get_mut(&rule.label).expect("label present").push(rule);
        }
        for class_rules in by_label.values_mut() {
            class_rules.sort_by(|a, b| rule_sort_key(a).cmp(&rule_sort_key(b)));
        }
        Ok(RuleSet {
            dataset: dataset.into(),
            labels,
            by_label,
        })
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn rules_for(&self, label: &str) -> &[Rule] {
        self.by_label.get(label).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// All rules, classes in label order.
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.labels.iter().flat_map(|l| self.rules_for(l).iter())
    }

    pub fn rule_count(&self) -> usize {
        self.by_label.values().map(|v| v.len()).sum()
    }

    /// Distinct symbols across all rules, in canonical order.
    pub fn distinct_symbols(&self) -> Vec<SymbolAtom> {
        let mut set: BTreeSet<SymbolAtom> = BTreeSet::new();
        for rule in self.rules() {
            for symbol in rule.symbols() {
                set.insert(symbol.clone());
            }
        }
        set.into_iter().collect()
    }

    /// Distinct symbols for one class's rules, in canonical order.
    pub fn class_symbols(&self, label: &str) -> Vec<SymbolAtom> {
        let mut set: BTreeSet<SymbolAtom> = BTreeSet::new();
        for rule in self.rules_for(label) {
            for symbol in rule.symbols() {
                set.insert(symbol.clone());
            }
        }
        set.into_iter().collect()
    }

    pub fn to_doc(&self) -> RuleSetDoc {
        RuleSetDoc {
            dataset: self.dataset.clone(),
            labels: self.labels.clone(),
            class_rules: self
                .labels
                .iter()
                .map(|label| ClassRulesDoc {
                    label: label.clone(),
                    rules: self
                        .rules_for(label)
                        .iter()
                        .map(|rule| RuleDoc {
                            groups: rule
                                .groups
                                .iter()
                                .map(|group| {
                                    group
                                        .iter()
                                        .map(|lit| LiteralDoc {
                                            symbol: lit.symbol.canonical().to_string(),
                                            negated: lit.negated,
                                        })
                                        .collect()
                                })
                                .collect(),
                            entailment: rule.entailment,
                            provenance: rule.provenance,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &RuleSetDoc) -> Result<Self, RuleError> {
        let mut rules = Vec::new();
        for class in &doc.class_rules {
            for rule_doc in &class.rules {
                let groups = rule_doc
                    .groups
                    .iter()
                    .map(|group| {
                        group
                            .iter()
                            .map(|lit| {
                                Ok(Literal {
                                    symbol: canonicalize(&lit.symbol)?,
                                    negated: lit.negated,
                                })
                            })
                            .collect::<Result<Vec<_>, RuleError>>()
                    })
                    .collect::<Result<Vec<_>, RuleError>>()?;
                // structural invariants still apply; the group cap is a
                // formation-time concern, so loading does not re-enforce it
                let mut rule = Rule::with_max_groups(&class.label, groups, usize::MAX)?
                    .with_provenance(rule_doc.provenance);
                rule.entailment = rule_doc.entailment;
                rules.push(rule);
            }
        }
        RuleSet::new(doc.dataset.clone(), doc.labels.clone(), rules)
    }

    pub fn to_json(&self) -> String {
        let mut text =
            serde_json::to_string_pretty(&self.to_doc()).expect("rule set serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, RuleError> {
        let doc: RuleSetDoc = serde_json::from_str(text).map_err(|e| RuleError::SyntaxError {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_doc(&doc)
    }
}

/// Persistence schema for a rule set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleSetDoc {
    pub dataset: String,
    pub labels: Vec<String>,
    pub class_rules: Vec<ClassRulesDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRulesDoc {
    pub label: String,
    pub rules: Vec<RuleDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleDoc {
    pub groups: Vec<Vec<LiteralDoc>>,
    pub entailment: Option<f64>,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LiteralDoc {
    pub symbol: String,
    pub negated: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rule(label: &str, text: &str, entailment: f64) -> Rule {
        crate::parse::parse_rule(&format!("{label} :- {text}"))
            .unwrap()
            .with_entailment(entailment)
    }

    #[test]
    fn rules_sorted_by_descending_entailment_then_text() {
        let rules = vec![
            rule("y", "b", 0.7),
            rule("y", "a", 0.9),
            rule("y", "c", 0.9),
        ];
        let set = RuleSet::new("d", vec!["y".into()], rules).unwrap();
        let texts: Vec<String> = set.rules_for("y").iter().map(|r| r.text()).collect();
        assert_eq!(texts, vec!["y :- a", "y :- c", "y :- b"]);
    }

    #[test]
    fn unknown_rule_label_is_rejected() {
        let rules = vec![rule("z", "a", 0.9)];
        assert_eq!(
            RuleSet::new("d", vec!["y".into()], rules),
            Err(RuleError::LabelNotListed {
                label: "z".to_string()
            })
        );
    }

    #[test]
    fn doc_round_trip_preserves_structure() {
        let rules = vec![
            rule("y", "a AND (NOT b OR c)", 0.9),
            rule("z", "d", 0.7),
        ];
        let set = RuleSet::new("d", vec!["y".into(), "z".into()], rules).unwrap();
        let json = set.to_json();
        let back = RuleSet::from_json(&json).unwrap();
        assert_eq!(set, back);
        assert_eq!(json, back.to_json());
    }

    #[test]
    fn doc_uses_exact_schema_keys() {
        let rules = vec![rule("y", "a", 0.9)];
        let set = RuleSet::new("d", vec!["y".into()], rules).unwrap();
        let value: serde_json::Value = serde_json::from_str(&set.to_json()).unwrap();
        assert!(value.get("dataset").is_some());
        assert!(value.get("labels").is_some());
        let class_rules = value.get("class_rules").unwrap().as_array().unwrap();
        let first = &class_rules[0];
        assert_eq!(first.get("label").unwrap(), "y");
        let rule0 = &first.get("rules").unwrap().as_array().unwrap()[0];
        assert!(rule0.get("groups").is_some());
        assert!(rule0.get("entailment").is_some());
        assert_eq!(rule0.get("provenance").unwrap(), "initial");
        let literal = &rule0.get("groups").unwrap()[0][0];
        assert_eq!(literal.get("symbol").unwrap(), "a");
        assert_eq!(literal.get("negated").unwrap(), false);
    }

    #[test]
    fn distinct_symbols_are_deduplicated_and_sorted() {
        let rules = vec![
            rule("y", "b AND a", 0.9),
            rule("z", "a AND c", 0.7),
        ];
        let set = RuleSet::new("d", vec!["y".into(), "z".into()], rules).unwrap();
        let symbols: Vec<String> = set
            .distinct_symbols()
            .iter()
            .map(|s| s.canonical().to_string())
            .collect();
        assert_eq!(symbols, vec!["a", "b", "c"]);
    }
}
