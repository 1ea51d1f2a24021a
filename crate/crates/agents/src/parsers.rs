use std::collections::BTreeSet;

use crn_rulecore::{canonicalize, SymbolAtom};

use crate::error::AgentError;

/// The five entailment options offered by the entailment template.
pub const ENTAILMENT_CHOICES: [(char, f64); 5] = [
    ('A', 0.1),
    ('B', 0.5),
    ('C', 0.7),
    ('D', 0.9),
    ('E', 0.95),
];

const REFUSAL_MARKERS: [&str; 16] = [
    "i cannot",
    "i can't",
    "i am unable",
    "i'm unable",
    "i am sorry",
    "i'm sorry",
    "sorry,",
    "i apologize",
    "as an ai",
    "as a language model",
    "no image",
    "cannot see",
    "can't see",
    "unable to see",
    "unable to view",
    "cannot help",
];

fn looks_like_refusal(line: &str) -> bool {
    let lower = line.to_lowercase();
    REFUSAL_MARKERS.iter().any(|m| lower.contains(m))
}

/// Strips leading enumeration ("1.", "2)", "3:") or bullet markers.
fn strip_enumeration(line: &str) -> &str {
    let trimmed = line.trim_start();
    if let Some(rest) = trimmed
        .strip_prefix('-')
        .or_else(|| trimmed.strip_prefix('*'))
        .or_else(|| trimmed.strip_prefix('•'))
    {
        return rest.trim_start();
    }
    let digits = trimmed.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let rest = &trimmed[digits..];
        if let Some(stripped) = rest
            .strip_prefix('.')
            .or_else(|| rest.strip_prefix(')'))
            .or_else(|| rest.strip_prefix(':'))
        {
            return stripped.trim_start();
        }
    }
    trimmed
}

/// Parses an enumerated or line-separated concept list from an agent reply.
///
/// Items are canonicalized and deduplicated preserving first appearance; at
/// most `max_items` are returned. Preamble lines ending in ':' and
/// refusal-style lines are skipped; a reply with no parseable items is an
/// error, never a silent empty list.
pub fn parse_concept_list(text: &str, max_items: usize) -> Result<Vec<SymbolAtom>, AgentError> {
    let mut seen: BTreeSet<String> = BTreeSet::new();
    let mut items = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.ends_with(':') || looks_like_refusal(line) {
            continue;
        }
        let item = strip_enumeration(line);
        let Ok(symbol) = canonicalize(item) else {
            continue;
        };
        if seen.insert(symbol.canonical().to_string()) {
            items.push(symbol);
            if items.len() == max_items {
                break;
            }
        }
    }
    if items.is_empty() {
        return Err(AgentError::EmptyConceptList);
    }
    Ok(items)
}

/// True when `text[i..]` starts a standalone occurrence of `letter`.
fn standalone_letter_at(bytes: &[u8], i: usize) -> bool {
    let before_ok = i == 0 || !bytes[i - 1].is_ascii_alphanumeric();
    let after_ok = i + 1 >= bytes.len() || !bytes[i + 1].is_ascii_alphanumeric();
    before_ok && after_ok
}

/// Maps an entailment reply onto one of the five template options.
///
/// Both option letters (A-E, uppercase, standalone) and literal values are
/// recognized; all mentions must agree on a single value. A leading "A" that
/// reads as an English article (followed by a lowercase word) is ignored.
pub fn parse_entailment_choice(text: &str) -> Result<f64, AgentError> {
    let mut mentioned: BTreeSet<&'static str> = BTreeSet::new();
    let value_of = |key: &str| -> f64 {
        match key {
            "0.1" => 0.1,
            "0.5" => 0.5,
            "0.7" => 0.7,
            "0.9" => 0.9,
            "0.95" => 0.95,
            _ => unreachable!(),
        }
    };

    let bytes = text.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        let c = b as char;
        if ('A'..='E').contains(&c) && standalone_letter_at(bytes, i) {
            if c == 'A' {
                let rest = text[i + 1..].trim_start();
                let article_like = i + 1 < bytes.len()
                    && bytes[i + 1] == b' '
                    && rest.chars().next().is_some_and(|n| n.is_ascii_lowercase());
                if article_like {
                    continue;
                }
            }
            let key = match c {
                'A' => "0.1",
                'B' => "0.5",
                'C' => "0.7",
                'D' => "0.9",
                'E' => "0.95",
                _ => unreachable!(),
            };
            mentioned.insert(key);
        }
    }

    // literal decimal mentions, longest-first so "0.95" is not read as "0.9"
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() || bytes[i] == b'.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            let token = &text[start..i];
            for key in ["0.95", "0.9", "0.7", "0.5", "0.1"] {
                if token == key {
                    mentioned.insert(key);
                    break;
                }
            }
        } else {
            i += 1;
        }
    }

    match mentioned.len() {
        1 => Ok(value_of(mentioned.iter().next().unwrap())),
        0 => Err(AgentError::AmbiguousEntailment(format!(
            "no option letter or value found in {text:?}"
        ))),
        _ => Err(AgentError::AmbiguousEntailment(format!(
            "conflicting options {mentioned:?} in {text:?}"
        ))),
    }
}
