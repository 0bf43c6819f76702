//! Generators for the experiment rule-set families.
//!
//! The topologies follow the documented case descriptions; the numeric
//! parameters (strengths, leaf priors, correlation targets) are fixture
//! choices with overridable defaults, recorded in the generated files.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::joint::{Formula, PropositionSpace};
use crate::maxent::Constraint;

use super::{compile, CompileError, Rule, RuleSet, RuleSetError, Strength};

/// Every case name `generate_family` accepts.
pub const FAMILY_NAMES: [&str; 26] = [
    "dpth-2",
    "dpth-1",
    "bsh2-upr",
    "bsh2-u&l",
    "bsh3-upr",
    "bsh3-u&l",
    "2cnc-2rls-pos",
    "2cnc-2rls-neg",
    "1cnc-2rls-pos",
    "1cnc-2rls-neg",
    "1cnc-2lyrs-pos",
    "1cnc-2lyrs-neg",
    "cnd-ind-2",
    "cnd-ind-3",
    "bsh2-upr-pos",
    "bsh2-upr-neg",
    "bsh2-u&l-pos",
    "bsh2-u&l-neg",
    "bsh3-upr-pos",
    "bsh3-upr-neg",
    "bsh3-u&l-pos",
    "bsh3-u&l-neg",
    "2cnc-min-shr-ruls-pos",
    "2cnc-min-shr-ruls-neg",
    "2cnc-max-shr-ruls-pos",
    "2cnc-max-shr-ruls-neg",
];

/// Fixture parameters; defaults are stand-ins, not published values.
#[derive(Debug, Clone, Copy)]
pub struct FamilyParams {
    /// Upper rule strength (CF form).
    pub upper: f64,
    /// Lower rule strength for the u&l cases (CF form).
    pub lower: f64,
    /// Prior probability of every input leaf.
    pub leaf_prior: f64,
    /// Pairwise antecedent overlap for the positively correlated cases.
    pub pair_high: f64,
    /// Pairwise antecedent overlap for the negatively correlated cases.
    pub pair_low: f64,
    /// How far consequent-overlap targets sit toward the Fréchet extreme
    /// (1 = at the bound, 0 = at the independent value).
    pub overlap_pull: f64,
}

impl Default for FamilyParams {
    fn default() -> Self {
        FamilyParams {
            upper: 0.8,
            lower: -0.3,
            leaf_prior: 0.5,
            pair_high: 0.45,
            pair_low: 0.05,
            overlap_pull: 0.8,
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum FamilyError {
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    RuleSet(#[from] RuleSetError),
    #[error("fitting an auxiliary prior failed: {0}")]
    Compile(#[from] CompileError),
}

/// Builds the named case.
pub fn generate_family(family: &str, params: &FamilyParams) -> Result<RuleSet, FamilyError> {
    if !(-1.0..=1.0).contains(&params.upper) || !(-1.0..=1.0).contains(&params.lower) {
        return Err(FamilyError::InvalidParams("strengths must lie in [-1, 1]".into()));
    }
    if !(0.0..=1.0).contains(&params.leaf_prior) {
        return Err(FamilyError::InvalidParams("leaf prior must lie in [0, 1]".into()));
    }
    let b = Builder {
        params: *params,
        name: family.to_string(),
    };
    match family {
        "dpth-2" => b.dpth2(),
        "dpth-1" => b.dpth1(),
        "bsh2-upr" => b.bushy(2, false, None),
        "bsh2-u&l" => b.bushy(2, true, None),
        "bsh3-upr" => b.bushy(3, false, None),
        "bsh3-u&l" => b.bushy(3, true, None),
        "2cnc-2rls-pos" => b.shared_antecedent(2, false, false),
        "2cnc-2rls-neg" => b.shared_antecedent(2, true, false),
        "1cnc-2rls-pos" => b.shared_antecedent(1, false, false),
        "1cnc-2rls-neg" => b.shared_antecedent(1, true, false),
        "1cnc-2lyrs-pos" => b.shared_antecedent(1, false, true),
        "1cnc-2lyrs-neg" => b.shared_antecedent(1, true, true),
        "cnd-ind-2" => b.cnd_ind(2),
        "cnd-ind-3" => b.cnd_ind(3),
        "bsh2-upr-pos" => b.bushy(2, false, Some(true)),
        "bsh2-upr-neg" => b.bushy(2, false, Some(false)),
        "bsh2-u&l-pos" => b.bushy(2, true, Some(true)),
        "bsh2-u&l-neg" => b.bushy(2, true, Some(false)),
        "bsh3-upr-pos" => b.bushy(3, false, Some(true)),
        "bsh3-upr-neg" => b.bushy(3, false, Some(false)),
        "bsh3-u&l-pos" => b.bushy(3, true, Some(true)),
        "bsh3-u&l-neg" => b.bushy(3, true, Some(false)),
        "2cnc-min-shr-ruls-pos" => b.shared_rules_overlap(false, false),
        "2cnc-min-shr-ruls-neg" => b.shared_rules_overlap(false, true),
        "2cnc-max-shr-ruls-pos" => b.shared_rules_overlap(true, false),
        "2cnc-max-shr-ruls-neg" => b.shared_rules_overlap(true, true),
        other => Err(FamilyError::UnknownFamily(other.to_string())),
    }
}

struct Builder {
    params: FamilyParams,
    name: String,
}

impl Builder {
    fn space(&self, names: &[&str]) -> Result<Arc<PropositionSpace>, FamilyError> {
        let space = PropositionSpace::new(names.iter().map(|s| s.to_string()).collect())
            .map_err(RuleSetError::from)?;
        Ok(Arc::new(space))
    }

    fn priors(&self, leaves: &[&str]) -> BTreeMap<String, f64> {
        leaves
            .iter()
            .map(|l| (l.to_string(), self.params.leaf_prior))
            .collect()
    }

    fn rule(&self, consequent: &str, antecedent: &str, with_lower: bool) -> Rule {
        Rule {
            consequent: consequent.to_string(),
            antecedent: Formula::parse(antecedent).expect("builder formulas parse"),
            upper: Strength::Cf(self.params.upper),
            lower: with_lower.then_some(Strength::Cf(self.params.lower)),
        }
    }

    fn build(
        &self,
        props: &[&str],
        leaves: &[&str],
        rules: Vec<Rule>,
        constraints: Vec<Constraint>,
    ) -> Result<RuleSet, FamilyError> {
        Ok(RuleSet::new(
            Some(self.name.clone()),
            self.space(props)?,
            self.priors(leaves),
            rules,
            constraints,
        )?)
    }

    /// Two-deep tree: two intermediate nodes each fed by two leaves.
    fn dpth2(&self) -> Result<RuleSet, FamilyError> {
        self.build(
            &["L1", "L2", "L3", "L4", "B1", "B2", "A"],
            &["L1", "L2", "L3", "L4"],
            vec![
                self.rule("B1", "(L1 & L2)", false),
                self.rule("B2", "(L3 & L4)", false),
                self.rule("A", "(B1 & B2)", false),
            ],
            vec![],
        )
    }

    /// The collapsed top rule of dpth-2: the intermediate nodes become
    /// leaves whose priors are their fitted values in the two-deep tree.
    fn dpth1(&self) -> Result<RuleSet, FamilyError> {
        let deep = Builder {
            params: self.params,
            name: "dpth-2".into(),
        }
        .dpth2()?;
        let compiled = compile(&deep, 1e-9, 10_000)?;
        let p_b1 = compiled.prior.marginal("B1").expect("B1 in space");
        let p_b2 = compiled.prior.marginal("B2").expect("B2 in space");
        let mut priors = BTreeMap::new();
        priors.insert("B1".to_string(), p_b1);
        priors.insert("B2".to_string(), p_b2);
        Ok(RuleSet::new(
            Some(self.name.clone()),
            self.space(&["B1", "B2", "A"])?,
            priors,
            vec![self.rule("A", "(B1 & B2)", false)],
            vec![],
        )?)
    }

    /// One rule with 2 or 3 conjunctive antecedents, with or without a
    /// lower strength, optionally with the antecedent correlation pinned
    /// high (`Some(true)`) or low (`Some(false)`).
    fn bushy(
        &self,
        antecedents: usize,
        with_lower: bool,
        correlated: Option<bool>,
    ) -> Result<RuleSet, FamilyError> {
        let (props, leaves, ant): (&[&str], &[&str], &str) = if antecedents == 2 {
            (&["B1", "B2", "A"], &["B1", "B2"], "(B1 & B2)")
        } else {
            (&["B1", "B2", "B3", "A"], &["B1", "B2", "B3"], "(B1 & B2 & B3)")
        };
        let mut constraints = Vec::new();
        if let Some(high) = correlated {
            let pair = if high {
                self.params.pair_high
            } else {
                self.params.pair_low
            };
            constraints.push(Constraint::marginal(
                Formula::parse("(B1 & B2)").expect("parses"),
                pair,
            ));
            if antecedents == 3 {
                constraints.push(Constraint::marginal(
                    Formula::parse("(B2 & B3)").expect("parses"),
                    pair,
                ));
            }
        }
        self.build(props, leaves, vec![self.rule("A", ant, with_lower)], constraints)
    }

    /// Two rules sharing an antecedent (directly or negated), pointing at
    /// two consequents, one shared consequent, or one consequent behind an
    /// extra layer.
    fn shared_antecedent(
        &self,
        consequents: usize,
        negated: bool,
        extra_layer: bool,
    ) -> Result<RuleSet, FamilyError> {
        let second_ant = if negated { "(!B2 & B3)" } else { "(B2 & B3)" };
        let leaves: &[&str] = &["B1", "B2", "B3"];
        if extra_layer {
            self.build(
                &["B1", "B2", "B3", "A1", "A2", "A"],
                leaves,
                vec![
                    self.rule("A1", "(B1 & B2)", false),
                    self.rule("A2", second_ant, false),
                    self.rule("A", "(A1 & A2)", false),
                ],
                vec![],
            )
        } else if consequents == 2 {
            self.build(
                &["B1", "B2", "B3", "A1", "A2"],
                leaves,
                vec![
                    self.rule("A1", "(B1 & B2)", false),
                    self.rule("A2", second_ant, false),
                ],
                vec![],
            )
        } else {
            self.build(
                &["B1", "B2", "B3", "A"],
                leaves,
                vec![
                    self.rule("A", "(B1 & B2)", false),
                    self.rule("A", second_ant, false),
                ],
                vec![],
            )
        }
    }

    /// Several single-antecedent rules bearing on one consequent; the
    /// fitted prior makes the antecedents conditionally independent.
    fn cnd_ind(&self, antecedents: usize) -> Result<RuleSet, FamilyError> {
        let (props, leaves): (&[&str], &[&str]) = if antecedents == 2 {
            (&["B1", "B2", "C"], &["B1", "B2"])
        } else {
            (&["B1", "B2", "B3", "C"], &["B1", "B2", "B3"])
        };
        let rules = leaves.iter().map(|b| self.rule("C", b, false)).collect();
        self.build(props, leaves, rules, vec![])
    }

    /// The 2cnc-2rls topology plus a pinned consequent overlap at (near)
    /// the maximum or minimum the fitted marginals allow.
    fn shared_rules_overlap(&self, max_overlap: bool, negated: bool) -> Result<RuleSet, FamilyError> {
        let base = self.shared_antecedent(2, negated, false)?;
        let compiled = compile(&base, 1e-9, 10_000)?;
        let p1 = compiled.prior.marginal("A1").expect("A1 in space");
        let p2 = compiled.prior.marginal("A2").expect("A2 in space");
        let independent = p1 * p2;
        let bound = if max_overlap {
            p1.min(p2)
        } else {
            (p1 + p2 - 1.0).max(0.0)
        };
        let pull = self.params.overlap_pull;
        let target = pull * bound + (1.0 - pull) * independent;
        let mut constraints = base.extra_constraints.clone();
        constraints.push(Constraint::marginal(
            Formula::parse("(A1 & A2)").expect("parses"),
            target,
        ));
        Ok(RuleSet::new(
            Some(self.name.clone()),
            Arc::clone(&base.space),
            base.leaf_priors.clone(),
            base.rules.clone(),
            constraints,
        )?)
    }
}
