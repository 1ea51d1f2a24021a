use crate::error::RuleError;
use crate::rule::{Literal, Rule, DEFAULT_MAX_GROUPS};
use crate::symbol::canonicalize;

/// Parses rule text of the form `<label> :- <group> ( AND <group> )*`.
///
/// A group is a single literal or `( <literal> OR <literal> )`; a literal is
/// `[NOT] <symbol text>`. Keywords are case-sensitive uppercase, so lowercase
/// "and"/"or"/"not" may appear inside symbol text.
pub fn parse_rule(text: &str) -> Result<Rule, RuleError> {
    parse_rule_with(text, DEFAULT_MAX_GROUPS)
}

/// Same as [`parse_rule`] with an explicit cap on the number of groups.
pub fn parse_rule_with(text: &str, max_groups: usize) -> Result<Rule, RuleError> {
    let sep = text.find(":-").ok_or_else(|| syntax(text, text.len(), "expected \":-\""))?;
    let label = text[..sep].trim();
    if label.is_empty() {
        return Err(syntax(text, 0, "expected a label before \":-\""));
    }
    let body_offset = sep + 2;
    let tokens = tokenize(text, body_offset);
    let mut parser = Parser {
        source: text,
        tokens,
        pos: 0,
    };

    let mut groups = Vec::new();
    loop {
        groups.push(parser.group()?);
        match parser.peek() {
            Some(tok) if tok.text == "AND" => {
                parser.pos += 1;
            }
            Some(tok) => {
                let offset = tok.offset;
                return Err(syntax(text, offset, "expected AND or end of rule"));
            }
            None => break,
        }
    }

    if groups.len() > max_groups {
        return Err(RuleError::RuleTooLong {
            groups: groups.len(),
            max: max_groups,
        });
    }
    Rule::with_max_groups(label, groups, max_groups)
}

struct Token<'a> {
    text: &'a str,
    offset: usize,
}

fn tokenize(text: &str, from: usize) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() {
        let c = text[i..].chars().next().unwrap();
        if c.is_whitespace() {
            i += c.len_utf8();
        } else if c == '(' || c == ')' {
            tokens.push(Token {
                text: &text[i..i + 1],
                offset: i,
            });
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() {
                let c = text[i..].chars().next().unwrap();
                if c.is_whitespace() || c == '(' || c == ')' {
                    break;
                }
                i += c.len_utf8();
            }
            tokens.push(Token {
                text: &text[start..i],
                offset: start,
            });
        }
    }
    tokens
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let mut line = 1;
    let mut column = 1;
    for (i, c) in text.char_indices() {
        if i >= offset {
            break;
        }
        if c == '\n' {
            line += 1;
            column = 1;
        } else {
            column += 1;
        }
    }
    (line, column)
}

fn syntax(text: &str, offset: usize, message: &str) -> RuleError {
    let (line, column) = line_column(text, offset);
    RuleError::SyntaxError {
        line,
        column,
        message: message.to_string(),
    }
}

struct Parser<'a> {
    source: &'a str,
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn end_offset(&self) -> usize {
        self.source.len()
    }

    fn group(&mut self) -> Result<Vec<Literal>, RuleError> {
        match self.peek() {
            Some(tok) if tok.text == "(" => {
                self.pos += 1;
                let first = self.literal(&["OR"])?;
                let or = self.peek().ok_or_else(|| {
                    syntax(self.source, self.end_offset(), "expected OR inside group")
                })?;
                if or.text != "OR" {
                    let offset = or.offset;
                    return Err(syntax(self.source, offset, "expected OR inside group"));
                }
                self.pos += 1;
                let second = self.literal(&[")"])?;
                let close = self.peek().ok_or_else(|| {
                    syntax(self.source, self.end_offset(), "expected closing \")\"")
                })?;
                if close.text != ")" {
                    let offset = close.offset;
                    return Err(syntax(self.source, offset, "expected closing \")\""));
                }
                self.pos += 1;
                Ok(vec![first, second])
            }
            Some(_) => Ok(vec![self.literal(&["AND"])?]),
            None => Err(syntax(self.source, self.end_offset(), "expected a group")),
        }
    }

    fn literal(&mut self, terminators: &[&str]) -> Result<Literal, RuleError> {
        let negated = match self.peek() {
            Some(tok) if tok.text == "NOT" => {
                self.pos += 1;
                true
            }
            _ => false,
        };

        let mut words: Vec<&str> = Vec::new();
        let mut start_offset = self.end_offset();
        while let Some(tok) = self.peek() {
            if terminators.contains(&tok.text)
                || tok.text == "AND"
                || tok.text == "OR"
                || tok.text == "("
                || tok.text == ")"
            {
                break;
            }
            if tok.text == "NOT" {
                let offset = tok.offset;
                return Err(syntax(self.source, offset, "NOT must start a literal"));
            }
            if words.is_empty() {
                start_offset = tok.offset;
            }
            words.push(tok.text);
            self.pos += 1;
        }

        if words.is_empty() {
            let offset = self.peek().map(|t| t.offset).unwrap_or_else(|| self.end_offset());
            return Err(syntax(self.source, offset, "expected symbol text"));
        }

        let raw = words.join(" ");
        let symbol = canonicalize(&raw).map_err(|_| {
            syntax(self.source, start_offset, "symbol text is empty after normalization")
        })?;
        Ok(Literal { symbol, negated })
    }
}
