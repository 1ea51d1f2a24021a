use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::RuleError;

/// An atomic symbol as produced by an agent, paired with its normalized form.
///
/// Equality, ordering, and hashing are all on the canonical form only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymbolAtom {
    raw: String,
    canonical: String,
}

impl SymbolAtom {
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }
}

impl PartialEq for SymbolAtom {
    fn eq(&self, other: &Self) -> bool {
        self.canonical == other.canonical
    }
}

impl Eq for SymbolAtom {}

impl PartialOrd for SymbolAtom {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SymbolAtom {
    fn cmp(&self, other: &Self) -> Ordering {
        self.canonical.cmp(&other.canonical)
    }
}

impl std::hash::Hash for SymbolAtom {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.canonical.hash(state);
    }
}

impl fmt::Display for SymbolAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

const ARTICLES: [&str; 3] = ["a", "an", "the"];

/// Normalizes raw agent text into a canonical symbol.
///
/// Lowercases, collapses whitespace, strips trailing ASCII punctuation, and
/// strips leading English articles. Idempotent: canonicalizing a canonical
/// form returns it unchanged.
pub fn canonicalize(raw: &str) -> Result<SymbolAtom, RuleError> {
    let lower = raw.to_lowercase();
    let collapsed = lower.split_whitespace().collect::<Vec<_>>().join(" ");
    let stripped =
        collapsed.trim_end_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace());

    let mut words: Vec<&str> = stripped.split(' ').filter(|w| !w.is_empty()).collect();
    // leading implies something follows: a lone "a" is a symbol, not an article
    while words.len() > 1 && ARTICLES.contains(&words[0]) {
        words.remove(0);
    }

    let canonical = words.join(" ");
    if canonical.is_empty() {
        return Err(RuleError::InvalidSymbol {
            raw: raw.to_string(),
        });
    }
    Ok(SymbolAtom {
        raw: raw.to_string(),
        canonical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_articles_case_and_punctuation() {
        let s = canonicalize("The Lobed Nucleus.").unwrap();
        assert_eq!(s.canonical(), "lobed nucleus");
        assert_eq!(s.raw(), "The Lobed Nucleus.");
    }

    #[test]
    fn collapses_whitespace() {
        let s = canonicalize("lobed   nucleus").unwrap();
        assert_eq!(s.canonical(), "lobed nucleus");
    }

    #[test]
    fn all_punctuation_is_invalid() {
        assert_eq!(
            canonicalize("..."),
            Err(RuleError::InvalidSymbol {
                raw: "...".to_string()
            })
        );
    }

    #[test]
    fn lone_article_word_is_a_valid_symbol() {
        assert_eq!(canonicalize("a").unwrap().canonical(), "a");
        assert_eq!(canonicalize("  The .. ").unwrap().canonical(), "the");
    }

    #[test]
    fn repeated_articles_are_stripped() {
        let s = canonicalize("the a dark granule").unwrap();
        assert_eq!(s.canonical(), "dark granule");
    }

    #[test]
    fn article_like_prefix_words_are_kept() {
        // token match only, never substring match
        let s = canonicalize("anode plate").unwrap();
        assert_eq!(s.canonical(), "anode plate");
    }

    #[test]
    fn internal_punctuation_is_kept() {
        let s = canonicalize("u.s. flag.").unwrap();
        assert_eq!(s.canonical(), "u.s. flag");
    }

    #[test]
    fn idempotent() {
        for raw in [
            "The Lobed Nucleus.",
            "lobed   nucleus",
            "an  Allergic Response!!",
            "u.s. flag.",
            "x",
        ] {
            let once = canonicalize(raw).unwrap();
            let twice = canonicalize(once.canonical()).unwrap();
            assert_eq!(once.canonical(), twice.canonical());
        }
    }

    #[test]
    fn equality_is_canonical_only() {
        let a = canonicalize("The Granule").unwrap();
        let b = canonicalize("granule").unwrap();
        assert_eq!(a, b);
    }
}
