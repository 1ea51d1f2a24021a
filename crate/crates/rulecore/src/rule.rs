use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RuleError;
use crate::symbol::SymbolAtom;

/// Default cap on the number of conjunction groups in a rule.
pub const DEFAULT_MAX_GROUPS: usize = 3;

/// A possibly-negated symbol occurrence inside a rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub symbol: SymbolAtom,
    pub negated: bool,
}

impl Literal {
    pub fn positive(symbol: SymbolAtom) -> Self {
        Literal {
            symbol,
            negated: false,
        }
    }

    pub fn negative(symbol: SymbolAtom) -> Self {
        Literal {
            symbol,
            negated: true,
        }
    }
}

/// Where a rule came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Initial,
    Explored,
    Counterfactual,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Initial => f.write_str("initial"),
            Provenance::Explored => f.write_str("explored"),
            Provenance::Counterfactual => f.write_str("counterfactual"),
        }
    }
}

/// A classification rule: a conjunction of disjunction groups implying a label.
///
/// Plain rules carry exactly one literal per group (a pure conjunction);
/// counterfactually augmented rules may carry two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub label: String,
    pub groups: Vec<Vec<Literal>>,
    pub entailment: Option<f64>,
    pub provenance: Provenance,
}

impl Rule {
    /// Builds a rule, validating against [`DEFAULT_MAX_GROUPS`].
    pub fn new(label: impl Into<String>, groups: Vec<Vec<Literal>>) -> Result<Self, RuleError> {
        Self::with_max_groups(label, groups, DEFAULT_MAX_GROUPS)
    }

    /// Builds a rule with an explicit group cap.
    pub fn with_max_groups(
        label: impl Into<String>,
        groups: Vec<Vec<Literal>>,
        max_groups: usize,
    ) -> Result<Self, RuleError> {
        if groups.is_empty() {
            return Err(RuleError::EmptyGroup);
        }
        if groups.len() > max_groups {
            return Err(RuleError::RuleTooLong {
                groups: groups.len(),
                max: max_groups,
            });
        }
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for group in &groups {
            if group.is_empty() {
                return Err(RuleError::EmptyGroup);
            }
            if group.len() > 2 {
                return Err(RuleError::GroupTooWide {
                    literals: group.len(),
                });
            }
            for lit in group {
                if !seen.insert(lit.symbol.canonical()) {
                    return Err(RuleError::DuplicateSymbol {
                        symbol: lit.symbol.canonical().to_string(),
                    });
                }
            }
        }
        Ok(Rule {
            label: label.into(),
            groups,
            entailment: None,
            provenance: Provenance::Initial,
        })
    }

    pub fn with_entailment(mut self, score: f64) -> Self {
        self.entailment = Some(score);
        self
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Distinct canonical symbols in group/literal order.
    pub fn symbols(&self) -> Vec<&SymbolAtom> {
        self.groups
            .iter()
            .flat_map(|g| g.iter().map(|l| &l.symbol))
            .collect()
    }

    /// Same label and same group structure; entailment and provenance ignored.
    pub fn same_structure(&self, other: &Rule) -> bool {
        self.label == other.label && self.groups == other.groups
    }

    /// The deterministic text form, see [`print_rule`].
    pub fn text(&self) -> String {
        print_rule(self)
    }
}

fn print_literal(out: &mut String, lit: &Literal) {
    if lit.negated {
        out.push_str("NOT ");
    }
    out.push_str(lit.symbol.canonical());
}

/// Prints a rule in the DSL surface syntax.
///
/// The output is byte-deterministic and reparses to a structurally equal rule.
pub fn print_rule(rule: &Rule) -> String {
    let mut out = String::new();
    out.push_str(&rule.label);
    out.push_str(" :- ");
    for (i, group) in rule.groups.iter().enumerate() {
        if i > 0 {
            out.push_str(" AND ");
        }
        match group.as_slice() {
            [lit] => print_literal(&mut out, lit),
            [first, second] => {
                out.push('(');
                print_literal(&mut out, first);
                out.push_str(" OR ");
                print_literal(&mut out, second);
                out.push(')');
            }
            _ => unreachable!("group sizes are validated at construction"),
        }
    }
    out
}
