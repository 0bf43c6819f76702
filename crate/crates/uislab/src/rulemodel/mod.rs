//! Rule-set data model, text format, constraint compilation and the
//! generators for the experiment families.

mod compile;
mod families;
mod parse;

use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use crate::joint::{Formula, JointError, PropositionSpace};
use crate::maxent::Constraint;

pub use compile::{compile, fit_prior, CompileError, CompiledRuleSet};
pub use families::{generate_family, FamilyError, FamilyParams, FAMILY_NAMES};
pub use parse::{parse, ParseError};

/// A rule strength, either as a certainty factor relative to the
/// consequent's prior or as an absolute conditional probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strength {
    Cf(f64),
    Prob(f64),
}

impl Strength {
    fn validate(self) -> Result<(), RuleSetError> {
        match self {
            Strength::Cf(v) if (-1.0..=1.0).contains(&v) => Ok(()),
            Strength::Prob(v) if (0.0..=1.0).contains(&v) => Ok(()),
            _ => Err(RuleSetError::StrengthOutOfRange),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub consequent: String,
    pub antecedent: Formula,
    pub upper: Strength,
    pub lower: Option<Strength>,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum RuleSetError {
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error("rule strength outside its valid range")]
    StrengthOutOfRange,
    #[error("prior {1} for `{0}` outside [0, 1]")]
    PriorOutOfRange(String, f64),
    #[error("rule for `{0}` mentions its own consequent in the antecedent")]
    SelfReference(String),
    #[error("directed cycle through `{0}`")]
    DirectedCycle(String),
    #[error("leaf `{0}` has no prior")]
    MissingPrior(String),
    #[error("`{0}` is a rule consequent and cannot carry a leaf prior")]
    PriorOnConsequent(String),
}

/// Propositions, leaf priors, rules and extra correlation constraints.
#[derive(Debug, Clone)]
pub struct RuleSet {
    pub name: Option<String>,
    pub space: Arc<PropositionSpace>,
    pub leaf_priors: BTreeMap<String, f64>,
    pub rules: Vec<Rule>,
    pub extra_constraints: Vec<Constraint>,
}

impl RuleSet {
    pub fn new(
        name: Option<String>,
        space: Arc<PropositionSpace>,
        leaf_priors: BTreeMap<String, f64>,
        rules: Vec<Rule>,
        extra_constraints: Vec<Constraint>,
    ) -> Result<Self, RuleSetError> {
        let rs = RuleSet {
            name,
            space,
            leaf_priors,
            rules,
            extra_constraints,
        };
        rs.validate()?;
        Ok(rs)
    }

    fn validate(&self) -> Result<(), RuleSetError> {
        for rule in &self.rules {
            self.space.index_of(&rule.consequent)?;
            rule.antecedent.validate(&self.space)?;
            if rule.antecedent.atoms().contains(&rule.consequent.as_str()) {
                return Err(RuleSetError::SelfReference(rule.consequent.clone()));
            }
            rule.upper.validate()?;
            if let Some(lower) = rule.lower {
                lower.validate()?;
            }
        }
        for (name, &p) in &self.leaf_priors {
            self.space.index_of(name)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(RuleSetError::PriorOutOfRange(name.clone(), p));
            }
            if self.rules.iter().any(|r| &r.consequent == name) {
                return Err(RuleSetError::PriorOnConsequent(name.clone()));
            }
        }
        for c in &self.extra_constraints {
            match c {
                Constraint::Marginal { target, .. } => target.validate(&self.space)?,
                Constraint::Conditional { target, given, .. } => {
                    target.validate(&self.space)?;
                    given.validate(&self.space)?;
                }
            }
        }
        self.topological_consequents()?;
        for leaf in self.leaves() {
            if !self.leaf_priors.contains_key(&leaf) {
                return Err(RuleSetError::MissingPrior(leaf));
            }
        }
        Ok(())
    }

    /// Propositions that are never a rule consequent, in space order.
    pub fn leaves(&self) -> Vec<String> {
        let consequents: HashSet<&str> =
            self.rules.iter().map(|r| r.consequent.as_str()).collect();
        self.space
            .names()
            .iter()
            .filter(|n| !consequents.contains(n.as_str()))
            .cloned()
            .collect()
    }

    /// Rule consequents ordered so that every consequent appears after all
    /// consequents its rules' antecedents depend on. Errors on a directed
    /// cycle.
    pub fn topological_consequents(&self) -> Result<Vec<String>, RuleSetError> {
        let mut consequents: Vec<String> = Vec::new();
        for r in &self.rules {
            if !consequents.contains(&r.consequent) {
                consequents.push(r.consequent.clone());
            }
        }
        // deps[c] = consequents mentioned in any antecedent of c's rules.
        let deps: BTreeMap<&str, HashSet<&str>> = consequents
            .iter()
            .map(|c| {
                let ds = self
                    .rules
                    .iter()
                    .filter(|r| &r.consequent == c)
                    .flat_map(|r| r.antecedent.atoms())
                    .filter(|a| consequents.iter().any(|k| k == a))
                    .collect();
                (c.as_str(), ds)
            })
            .collect();
        let mut ordered = Vec::new();
        let mut placed: HashSet<&str> = HashSet::new();
        while ordered.len() < consequents.len() {
            let mut progressed = false;
            for c in &consequents {
                if placed.contains(c.as_str()) {
                    continue;
                }
                if deps[c.as_str()].iter().all(|d| placed.contains(d)) {
                    placed.insert(c);
                    ordered.push(c.clone());
                    progressed = true;
                }
            }
            if !progressed {
                let stuck = consequents
                    .iter()
                    .find(|c| !placed.contains(c.as_str()))
                    .expect("unplaced consequent exists");
                return Err(RuleSetError::DirectedCycle(stuck.clone()));
            }
        }
        Ok(ordered)
    }

    /// All rules whose consequent is `name`.
    pub fn rules_for<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a Rule> + 'a {
        self.rules.iter().filter(move |r| r.consequent == name)
    }

    /// Writes the rule set in the text format; `parse` round-trips it.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for name in self.space.names() {
            out.push_str(&format!("prop {name}\n"));
        }
        for (name, p) in &self.leaf_priors {
            out.push_str(&format!("prior {name} = {p}\n"));
        }
        for c in &self.extra_constraints {
            match c {
                Constraint::Marginal { target, value } => {
                    out.push_str(&format!("constrain p({target}) = {value}\n"));
                }
                Constraint::Conditional { target, given, value } => {
                    out.push_str(&format!("constrain p({target} | {given}) = {value}\n"));
                }
            }
        }
        for rule in &self.rules {
            out.push_str(&format!(
                "rule {} <- {} {}",
                rule.consequent,
                rule.antecedent,
                strength_text(rule.upper)
            ));
            if let Some(lower) = rule.lower {
                out.push_str(&format!(" lower {}", strength_text(lower)));
            }
            out.push('\n');
        }
        out
    }

    /// Structural equality ignoring the display name.
    pub fn semantically_equal(&self, other: &RuleSet) -> bool {
        self.space.names() == other.space.names()
            && self.leaf_priors == other.leaf_priors
            && self.rules == other.rules
            && self.extra_constraints == other.extra_constraints
    }
}

fn strength_text(s: Strength) -> String {
    match s {
        Strength::Cf(v) => format!("cf {v}"),
        Strength::Prob(v) => format!("prob {v}"),
    }
}
