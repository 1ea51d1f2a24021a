//! Rule data model, textual rule DSL, and fuzzy first-order evaluation.
//!
//! Rules are conjunctions of groups, each group a disjunction of one or two
//! possibly-negated symbols. Evaluation uses Gödel semantics: AND is min,
//! OR is max, NOT is complement. All values here are immutable after
//! construction and every operation is pure.

mod error;
mod eval;
mod parse;
mod rule;
mod ruleset;
mod scores;
mod symbol;

pub use error::RuleError;
pub use eval::{eval_class, eval_class_detailed, eval_rule, system2_vector, system2_vector_opts, ClassScore};
pub use parse::{parse_rule, parse_rule_with};
pub use rule::{print_rule, Literal, Provenance, Rule, DEFAULT_MAX_GROUPS};
pub use ruleset::{RuleSet, RuleSetDoc};
pub use scores::ScoreTable;
pub use symbol::{canonicalize, SymbolAtom};
