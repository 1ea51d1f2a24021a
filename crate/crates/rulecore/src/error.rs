use thiserror::Error;

/// Errors produced by the rule model, parser, and evaluator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("invalid symbol: {raw:?} is empty after normalization")]
    InvalidSymbol { raw: String },
    #[error("syntax error at line {line}, column {column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rule has {groups} groups, maximum is {max}")]
    RuleTooLong { groups: usize, max: usize },
    #[error("duplicate symbol in rule: {symbol}")]
    DuplicateSymbol { symbol: String },
    #[error("empty group in rule")]
    EmptyGroup,
    #[error("group has {literals} literals, maximum is 2")]
    GroupTooWide { literals: usize },
    #[error("no score for symbol: {symbol}")]
    MissingScore { symbol: String },
    #[error("unknown label: {label}")]
    UnknownLabel { label: String },
    #[error("score {value} for {symbol} is outside [0, 1]")]
    ScoreOutOfRange { symbol: String, value: f64 },
    #[error("rule label {label} is not in the rule set's label list")]
    LabelNotListed { label: String },
}
