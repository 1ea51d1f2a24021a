use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::RuleError;
use crate::symbol::SymbolAtom;

/// Per-symbol presence probabilities for one test input.
///
/// Lookup of an absent symbol is an error, never a silent default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable(BTreeMap<String, f64>);

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, symbol: &SymbolAtom, value: f64) -> Result<(), RuleError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(RuleError::ScoreOutOfRange {
                symbol: symbol.canonical().to_string(),
                value,
            });
        }
        self.0.insert(symbol.canonical().to_string(), value);
        Ok(())
    }

    pub fn get(&self, symbol: &SymbolAtom) -> Result<f64, RuleError> {
        self.0
            .get(symbol.canonical())
            .copied()
            .ok_or_else(|| RuleError::MissingScore {
                symbol: symbol.canonical().to_string(),
            })
    }

    pub fn contains(&self, symbol: &SymbolAtom) -> bool {
        self.0.contains_key(symbol.canonical())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries in canonical symbol order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}
