//! Boolean event formulas over named propositions.
//!
//! The text syntax is shared with the rule-file grammar:
//! `IDENT`, `!f`, `(f & f & ...)`, `(f | f | ...)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{JointError, PropositionSpace};

/// An event: a boolean combination of propositions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Formula {
    Atom(String),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(children: Vec<Formula>) -> Self {
        debug_assert!(children.len() >= 2);
        Formula::And(children)
    }

    pub fn or(children: Vec<Formula>) -> Self {
        debug_assert!(children.len() >= 2);
        Formula::Or(children)
    }

    /// Conjunction or disjunction of two formulas.
    pub fn and2(a: Formula, b: Formula) -> Self {
        Formula::And(vec![a, b])
    }

    pub fn or2(a: Formula, b: Formula) -> Self {
        Formula::Or(vec![a, b])
    }

    /// Checks that every atom exists in `space` and that connectives have
    /// at least two children.
    pub fn validate(&self, space: &PropositionSpace) -> Result<(), JointError> {
        match self {
            Formula::Atom(name) => {
                space.index_of(name)?;
                Ok(())
            }
            Formula::Not(child) => child.validate(space),
            Formula::And(children) | Formula::Or(children) => {
                if children.len() < 2 {
                    return Err(JointError::ArityTooSmall);
                }
                children.iter().try_for_each(|c| c.validate(space))
            }
        }
    }

    /// Truth value under the assignment encoded by `atom_index` (bit i =
    /// truth of proposition i).
    pub fn eval(&self, space: &PropositionSpace, atom_index: usize) -> Result<bool, JointError> {
        match self {
            Formula::Atom(name) => {
                let i = space.index_of(name)?;
                Ok(atom_index >> i & 1 == 1)
            }
            Formula::Not(child) => Ok(!child.eval(space, atom_index)?),
            Formula::And(children) => {
                for c in children {
                    if !c.eval(space, atom_index)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Formula::Or(children) => {
                for c in children {
                    if c.eval(space, atom_index)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Collects atom names mentioned in the formula, in first-occurrence order.
    pub fn atoms(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Formula::Atom(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            Formula::Not(child) => child.collect_atoms(out),
            Formula::And(children) | Formula::Or(children) => {
                children.iter().for_each(|c| c.collect_atoms(out));
            }
        }
    }

    /// Parses the shared formula syntax.
    pub fn parse(text: &str) -> Result<Formula, FormulaParseError> {
        let mut parser = FormulaParser {
            chars: text.char_indices().peekable(),
            text,
        };
        let f = parser.formula()?;
        parser.skip_ws();
        if let Some(&(pos, _)) = parser.chars.peek() {
            return Err(FormulaParseError {
                col: pos,
                message: "trailing input after formula".into(),
            });
        }
        Ok(f)
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::Atom(name) => write!(f, "{name}"),
            Formula::Not(child) => write!(f, "!{child}"),
            Formula::And(children) => write_joined(f, children, " & "),
            Formula::Or(children) => write_joined(f, children, " | "),
        }
    }
}

fn write_joined(f: &mut fmt::Formatter<'_>, children: &[Formula], sep: &str) -> fmt::Result {
    write!(f, "(")?;
    for (i, c) in children.iter().enumerate() {
        if i > 0 {
            write!(f, "{sep}")?;
        }
        write!(f, "{c}")?;
    }
    write!(f, ")")
}

/// Syntax error in the formula text, with a byte offset into the input.
#[derive(Debug, Clone, thiserror::Error)]
#[error("formula syntax error at column {col}: {message}")]
pub struct FormulaParseError {
    pub col: usize,
    pub message: String,
}

struct FormulaParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    text: &'a str,
}

impl<'a> FormulaParser<'a> {
    fn skip_ws(&mut self) {
        while matches!(self.chars.peek(), Some(&(_, c)) if c.is_whitespace()) {
            self.chars.next();
        }
    }

    fn err(&mut self, message: impl Into<String>) -> FormulaParseError {
        let col = self.chars.peek().map_or(self.text.len(), |&(i, _)| i);
        FormulaParseError {
            col,
            message: message.into(),
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaParseError> {
        self.skip_ws();
        match self.chars.peek() {
            Some(&(_, '!')) => {
                self.chars.next();
                Ok(Formula::not(self.formula()?))
            }
            Some(&(_, '(')) => {
                self.chars.next();
                self.connective()
            }
            Some(&(_, c)) if is_ident_start(c) => Ok(Formula::Atom(self.ident())),
            _ => Err(self.err("expected '!', '(' or proposition name")),
        }
    }

    // Inside parentheses: formula (op formula)+ with a single connective kind.
    fn connective(&mut self) -> Result<Formula, FormulaParseError> {
        let first = self.formula()?;
        self.skip_ws();
        let op = match self.chars.peek() {
            Some(&(_, c @ ('&' | '|'))) => c,
            _ => return Err(self.err("expected '&' or '|'")),
        };
        let mut children = vec![first];
        loop {
            self.skip_ws();
            match self.chars.peek() {
                Some(&(_, c)) if c == op => {
                    self.chars.next();
                    children.push(self.formula()?);
                }
                Some(&(_, ')')) => {
                    self.chars.next();
                    break;
                }
                Some(&(_, c @ ('&' | '|'))) => {
                    return Err(self.err(format!("mixed '{op}' and '{c}' need parentheses")))
                }
                _ => return Err(self.err("expected operator or ')'")),
            }
        }
        Ok(if op == '&' {
            Formula::And(children)
        } else {
            Formula::Or(children)
        })
    }

    fn ident(&mut self) -> String {
        let mut name = String::new();
        while let Some(&(_, c)) = self.chars.peek() {
            if is_ident_char(c) {
                name.push(c);
                self.chars.next();
            } else {
                break;
            }
        }
        name
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}
