//! Line-oriented parser for the rule-file format.
//!
//! ```text
//! # comment
//! prop A1
//! prior A1 = 0.5
//! constrain p((A1 & A2)) = 0.111
//! constrain p(C | A1) = 0.8
//! rule C <- (A1 & A2) cf 0.9 lower cf -0.3
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::joint::{Formula, PropositionSpace};
use crate::maxent::Constraint;

use super::{Rule, RuleSet, RuleSetError, Strength};

#[derive(Debug, Clone, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Semantic {
        line: usize,
        source: RuleSetError,
    },
    #[error("{0}")]
    Structure(#[from] RuleSetError),
}

/// Parses the text format into a validated rule set.
pub fn parse(text: &str) -> Result<RuleSet, ParseError> {
    let mut props: Vec<String> = Vec::new();
    let mut priors: BTreeMap<String, f64> = BTreeMap::new();
    let mut prior_lines: BTreeMap<String, usize> = BTreeMap::new();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut rules: Vec<Rule> = Vec::new();

    for (line_no, raw) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let mut cur = Cursor {
            line,
            pos: 0,
            line_no,
        };
        let keyword = cur.word()?;
        match keyword.as_str() {
            "prop" => {
                let name = cur.word()?;
                cur.end()?;
                if props.contains(&name) {
                    return Err(cur.fail(format!("duplicate proposition `{name}`")));
                }
                props.push(name);
            }
            "prior" => {
                let name = cur.word()?;
                cur.expect("=")?;
                let value = cur.number()?;
                cur.end()?;
                if let Some(prev) = prior_lines.insert(name.clone(), line_no) {
                    return Err(cur.fail(format!(
                        "duplicate prior for `{name}` (first given on line {prev})"
                    )));
                }
                priors.insert(name, value);
            }
            "constrain" => {
                cur.expect("p(")?;
                let target = cur.formula_until(&['|', ')'])?;
                let given = if cur.peek_is('|') {
                    cur.expect("|")?;
                    Some(cur.formula_until(&[')'])?)
                } else {
                    None
                };
                cur.expect(")")?;
                cur.expect("=")?;
                let value = cur.number()?;
                cur.end()?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(cur.fail(format!("probability {value} outside [0, 1]")));
                }
                constraints.push(match given {
                    Some(given) => Constraint::conditional(target, given, value),
                    None => Constraint::marginal(target, value),
                });
            }
            "rule" => {
                let consequent = cur.word()?;
                cur.expect("<-")?;
                let antecedent = cur.formula_before_strength()?;
                let upper = cur.strength()?;
                let lower = if cur.at_end() {
                    None
                } else {
                    cur.expect("lower")?;
                    Some(cur.strength()?)
                };
                cur.end()?;
                rules.push(Rule {
                    consequent,
                    antecedent,
                    upper,
                    lower,
                });
            }
            other => {
                return Err(cur.fail(format!(
                    "unknown keyword `{other}` (expected prop, prior, constrain or rule)"
                )))
            }
        }
    }

    let space = PropositionSpace::new(props).map_err(RuleSetError::from)?;
    RuleSet::new(None, Arc::new(space), priors, rules, constraints).map_err(ParseError::from)
}

struct Cursor<'a> {
    line: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn fail(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line_no,
            col: self.pos + 1,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.line.len() - trimmed.len();
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.line.len()
    }

    fn end(&mut self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.fail(format!("unexpected trailing `{}`", self.rest())))
        }
    }

    fn peek_is(&mut self, c: char) -> bool {
        self.skip_ws();
        self.rest().starts_with(c)
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            Ok(())
        } else {
            Err(self.fail(format!("expected `{token}`")))
        }
    }

    fn word(&mut self) -> Result<String, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == '_' || *c == '-')
            .map(char::len_utf8)
            .sum::<usize>();
        if len == 0 {
            return Err(self.fail("expected identifier"));
        }
        self.pos += len;
        Ok(rest[..len].to_string())
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let len = rest
            .chars()
            .take_while(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
            .map(char::len_utf8)
            .sum::<usize>();
        let text = &rest[..len];
        let value = text
            .parse::<f64>()
            .map_err(|_| self.fail(format!("expected number, found `{text}`")))?;
        self.pos += len;
        Ok(value)
    }

    fn strength(&mut self) -> Result<Strength, ParseError> {
        self.skip_ws();
        if self.rest().starts_with("cf") {
            self.pos += 2;
            let v = self.number()?;
            if !(-1.0..=1.0).contains(&v) {
                return Err(self.fail(format!("cf {v} outside [-1, 1]")));
            }
            Ok(Strength::Cf(v))
        } else if self.rest().starts_with("prob") {
            self.pos += 4;
            let v = self.number()?;
            if !(0.0..=1.0).contains(&v) {
                return Err(self.fail(format!("prob {v} outside [0, 1]")));
            }
            Ok(Strength::Prob(v))
        } else {
            Err(self.fail("expected `cf` or `prob`"))
        }
    }

    /// Parses a formula that ends just before one of `stops` at paren
    /// depth zero (for the constrain form).
    fn formula_until(&mut self, stops: &[char]) -> Result<Formula, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let mut depth = 0usize;
        let mut len = rest.len();
        for (i, c) in rest.char_indices() {
            match c {
                '(' => depth += 1,
                ')' if depth > 0 => depth -= 1,
                c if depth == 0 && stops.contains(&c) => {
                    len = i;
                    break;
                }
                _ => {}
            }
        }
        let text = rest[..len].trim();
        let f = Formula::parse(text).map_err(|e| self.fail(e.to_string()))?;
        self.pos += len;
        Ok(f)
    }

    /// Parses a formula that ends just before the strength keyword.
    fn formula_before_strength(&mut self) -> Result<Formula, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let stop = ["cf", "prob"]
            .iter()
            .filter_map(|kw| find_keyword(rest, kw))
            .min()
            .ok_or_else(|| self.fail("rule is missing its strength (`cf` or `prob`)"))?;
        let text = rest[..stop].trim();
        let f = Formula::parse(text).map_err(|e| self.fail(e.to_string()))?;
        self.pos += stop;
        Ok(f)
    }
}

/// Position of a whitespace-delimited keyword occurrence.
fn find_keyword(text: &str, kw: &str) -> Option<usize> {
    let mut from = 0;
    while let Some(i) = text[from..].find(kw) {
        let at = from + i;
        let before_ok = at == 0 || text[..at].ends_with(|c: char| c.is_whitespace() || c == ')');
        let after = &text[at + kw.len()..];
        let after_ok = after.is_empty() || after.starts_with(|c: char| c.is_whitespace());
        if before_ok && after_ok {
            return Some(at);
        }
        from = at + kw.len();
    }
    None
}
