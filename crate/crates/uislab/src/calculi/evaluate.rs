//! Propagation of leaf evidence through a rule tree under each calculus.
//!
//! All three systems read their knowledge off the same fitted prior: rule
//! CFs compare p0(C|antecedent) with p0(C), and the CI likelihood tables
//! are the prior's conditionals. Only the propagation mechanics differ.

use std::collections::BTreeMap;

use crate::joint::{Formula, JointDistribution, JointError};
use crate::rulemodel::{Rule, RuleSet, RuleSetError};

use super::{
    cf_from_probs, ci_update, combine_parallel, myc_modus_ponens, prob_from_cf,
    tsm_modus_ponens, CalculusError, CertaintyFactor, CiLeaf, CiParameters, UisKind,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    RuleSet(#[from] RuleSetError),
    #[error("leaf `{0}` appears in a rule but has no posterior")]
    UnboundLeaf(String),
    #[error("posterior {1} for `{0}` outside [0, 1]")]
    PosteriorOutOfRange(String, f64),
}

/// Runs one calculus over the rule set and returns the posterior
/// probability of every consequent.
pub fn evaluate(
    uis: UisKind,
    rs: &RuleSet,
    prior: &JointDistribution,
    leaf_posteriors: &BTreeMap<String, f64>,
) -> Result<BTreeMap<String, f64>, EvalError> {
    for (name, &p) in leaf_posteriors {
        rs.space.index_of(name)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(EvalError::PosteriorOutOfRange(name.clone(), p));
        }
    }
    let order = rs.topological_consequents()?;
    let referenced: Vec<&str> = rs
        .rules
        .iter()
        .flat_map(|r| r.antecedent.atoms())
        .collect();
    for leaf in rs.leaves() {
        if referenced.contains(&leaf.as_str()) && !leaf_posteriors.contains_key(&leaf) {
            return Err(EvalError::UnboundLeaf(leaf));
        }
    }
    match uis {
        UisKind::Myc | UisKind::Tsm => evaluate_cf_system(uis, rs, prior, leaf_posteriors, &order),
        UisKind::Ci => evaluate_ci(rs, prior, leaf_posteriors, &order),
    }
}

fn evaluate_cf_system(
    uis: UisKind,
    rs: &RuleSet,
    prior: &JointDistribution,
    leaf_posteriors: &BTreeMap<String, f64>,
    order: &[String],
) -> Result<BTreeMap<String, f64>, EvalError> {
    // CFs of every known node; leaves first, consequents added upward.
    let mut cfs: BTreeMap<String, CertaintyFactor> = BTreeMap::new();
    for (name, &p1) in leaf_posteriors {
        let p0 = prior.marginal(name)?;
        cfs.insert(name.clone(), cf_from_probs(p1, p0)?);
    }
    let mut out = BTreeMap::new();
    for consequent in order {
        let p0_c = prior.marginal(consequent)?;
        let mut combined: Option<CertaintyFactor> = None;
        for rule in rs.rules_for(consequent) {
            let antecedent_cf = formula_cf(&rule.antecedent, &cfs)?;
            let (upper, lower) = rule_strengths(rule, prior, p0_c)?;
            let result = match uis {
                UisKind::Myc => myc_modus_ponens(upper, antecedent_cf),
                UisKind::Tsm => tsm_modus_ponens(upper, lower, antecedent_cf),
                UisKind::Ci => unreachable!(),
            };
            combined = Some(match combined {
                None => result,
                Some(prev) => combine_parallel(prev, result)?,
            });
        }
        let cf_c = combined.expect("consequent has at least one rule");
        cfs.insert(consequent.clone(), cf_c);
        out.insert(consequent.clone(), prob_from_cf(cf_c, p0_c));
    }
    Ok(out)
}

/// Rule strengths read off the fitted prior, so all calculi share the same
/// knowledge. The lower strength is extracted only when the rule models one.
fn rule_strengths(
    rule: &Rule,
    prior: &JointDistribution,
    p0_c: f64,
) -> Result<(CertaintyFactor, Option<CertaintyFactor>), EvalError> {
    let c = Formula::atom(&rule.consequent);
    let p_given_ant = prior.conditional_probability(&c, &rule.antecedent)?;
    let upper = cf_from_probs(p_given_ant, p0_c)?;
    let lower = match rule.lower {
        None => None,
        Some(_) => {
            let not_ant = Formula::not(rule.antecedent.clone());
            let p_given_not = prior.conditional_probability(&c, &not_ant)?;
            Some(cf_from_probs(p_given_not, p0_c)?)
        }
    };
    Ok((upper, lower))
}

/// CF of an antecedent expression via min / max / negation.
fn formula_cf(
    f: &Formula,
    cfs: &BTreeMap<String, CertaintyFactor>,
) -> Result<CertaintyFactor, EvalError> {
    match f {
        Formula::Atom(name) => cfs
            .get(name)
            .copied()
            .ok_or_else(|| EvalError::UnboundLeaf(name.clone())),
        Formula::Not(child) => Ok(super::cf_not(formula_cf(child, cfs)?)),
        Formula::And(children) => {
            let vals = children
                .iter()
                .map(|c| formula_cf(c, cfs))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(super::cf_and(&vals)?)
        }
        Formula::Or(children) => {
            let vals = children
                .iter()
                .map(|c| formula_cf(c, cfs))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(super::cf_or(&vals)?)
        }
    }
}

fn evaluate_ci(
    rs: &RuleSet,
    prior: &JointDistribution,
    leaf_posteriors: &BTreeMap<String, f64>,
    order: &[String],
) -> Result<BTreeMap<String, f64>, EvalError> {
    let mut posteriors = leaf_posteriors.clone();
    let mut out = BTreeMap::new();
    for consequent in order {
        let params = ci_parameters(rs, prior, consequent)?;
        let p1 = ci_update(&params, &posteriors)?;
        posteriors.insert(consequent.clone(), p1);
        out.insert(consequent.clone(), p1);
    }
    Ok(out)
}

/// Likelihood tables for one consequent, read off the prior. Every literal
/// occurrence across all of the consequent's rules contributes one factor.
fn ci_parameters(
    rs: &RuleSet,
    prior: &JointDistribution,
    consequent: &str,
) -> Result<CiParameters, EvalError> {
    let c = Formula::atom(consequent);
    let not_c = Formula::not(c.clone());
    let prior0 = prior.marginal(consequent)?;
    let mut leaves = Vec::new();
    if prior0 > 0.0 && prior0 < 1.0 {
        for rule in rs.rules_for(consequent) {
            let mut literals = Vec::new();
            collect_literals(&rule.antecedent, false, &mut literals);
            for (name, negated) in literals {
                let literal = if negated {
                    Formula::not(Formula::atom(name))
                } else {
                    Formula::atom(name)
                };
                leaves.push(CiLeaf {
                    name: name.to_string(),
                    negated,
                    prior: prior.probability(&literal)?,
                    likelihood_true: prior.conditional_probability(&literal, &c)?,
                    likelihood_false: prior.conditional_probability(&literal, &not_c)?,
                });
            }
        }
    }
    Ok(CiParameters { prior0, leaves })
}

/// Flattens an antecedent into (atom, negated) literals. Conjunctions
/// concatenate; disjunctions go through DeMorgan, which lands on the same
/// literal polarities.
fn collect_literals<'a>(f: &'a Formula, negated: bool, out: &mut Vec<(&'a str, bool)>) {
    match f {
        Formula::Atom(name) => out.push((name, negated)),
        Formula::Not(child) => collect_literals(child, !negated, out),
        Formula::And(children) | Formula::Or(children) => {
            children.iter().for_each(|c| collect_literals(c, negated, out));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxent::{self, Constraint};
    use crate::rulemodel::Strength;
    use crate::testutil::space_named;
    use std::sync::Arc;

    /// C <- A with an absolute strength, leaf prior 0.5.
    fn single_rule_set() -> (RuleSet, JointDistribution) {
        let space = space_named(&["A", "C"]);
        let rs = RuleSet::new(
            None,
            Arc::clone(&space),
            [("A".to_string(), 0.5)].into(),
            vec![Rule {
                consequent: "C".into(),
                antecedent: Formula::atom("A"),
                upper: Strength::Prob(0.8),
                lower: None,
            }],
            vec![],
        )
        .unwrap();
        let constraints = [
            Constraint::marginal(Formula::atom("A"), 0.5),
            Constraint::conditional(Formula::atom("C"), Formula::atom("A"), 0.8),
        ];
        let (prior, _) =
            maxent::fit_max_entropy_prior(space, &constraints, 1e-12, 10_000).unwrap();
        (rs, prior)
    }

    #[test]
    fn neutral_evidence_leaves_every_uis_at_the_prior() {
        let (rs, prior) = single_rule_set();
        let posteriors: BTreeMap<String, f64> = [("A".to_string(), 0.5)].into();
        let p0_c = prior.marginal("C").unwrap();
        for uis in UisKind::ALL {
            let out = evaluate(uis, &rs, &prior, &posteriors).unwrap();
            assert!(
                (out["C"] - p0_c).abs() < 1e-9,
                "{}: {} vs {}",
                uis.name(),
                out["C"],
                p0_c
            );
        }
    }

    #[test]
    fn sharp_evidence_on_a_bayes_consistent_rule_matches_the_conditional() {
        let (rs, prior) = single_rule_set();
        let posteriors: BTreeMap<String, f64> = [("A".to_string(), 1.0)].into();
        for uis in UisKind::ALL {
            let out = evaluate(uis, &rs, &prior, &posteriors).unwrap();
            assert!((out["C"] - 0.8).abs() < 1e-6, "{}: {}", uis.name(), out["C"]);
        }
    }

    #[test]
    fn myc_conjunction_with_one_neutral_leaf_stays_at_the_prior() {
        let space = space_named(&["A1", "A2", "C"]);
        let rs = RuleSet::new(
            None,
            Arc::clone(&space),
            [("A1".to_string(), 0.5), ("A2".to_string(), 0.5)].into(),
            vec![Rule {
                consequent: "C".into(),
                antecedent: Formula::parse("(A1 & A2)").unwrap(),
                upper: Strength::Prob(0.9),
                lower: None,
            }],
            vec![],
        )
        .unwrap();
        let constraints = [
            Constraint::marginal(Formula::atom("A1"), 0.5),
            Constraint::marginal(Formula::atom("A2"), 0.5),
            Constraint::conditional(
                Formula::atom("C"),
                Formula::parse("(A1 & A2)").unwrap(),
                0.9,
            ),
        ];
        let (prior, _) = maxent::fit_max_entropy_prior(space, &constraints, 1e-12, 10_000).unwrap();
        // cf(A1) = 0, cf(A2) = 1: the conjunction CF is 0 under min.
        let posteriors: BTreeMap<String, f64> = [("A1".to_string(), 0.5), ("A2".to_string(), 1.0)].into();
        let out = evaluate(UisKind::Myc, &rs, &prior, &posteriors).unwrap();
        let p0_c = prior.marginal("C").unwrap();
        assert!((out["C"] - p0_c).abs() < 1e-9);
    }

    #[test]
    fn missing_referenced_leaf_is_unbound() {
        let (rs, prior) = single_rule_set();
        let result = evaluate(UisKind::Myc, &rs, &prior, &BTreeMap::new());
        assert!(matches!(result, Err(EvalError::UnboundLeaf(_))));
    }

    #[test]
    fn tsm_agrees_with_myc_on_nonnegative_evidence() {
        let (rs, prior) = single_rule_set();
        for p in [0.5, 0.6, 0.75, 0.9, 1.0] {
            let posteriors: BTreeMap<String, f64> = [("A".to_string(), p)].into();
            let myc = evaluate(UisKind::Myc, &rs, &prior, &posteriors).unwrap();
            let tsm = evaluate(UisKind::Tsm, &rs, &prior, &posteriors).unwrap();
            assert!((myc["C"] - tsm["C"]).abs() < 1e-12);
        }
    }

    #[test]
    fn tsm_lowers_the_consequent_on_disconfirming_evidence() {
        let (rs, prior) = single_rule_set();
        let posteriors: BTreeMap<String, f64> = [("A".to_string(), 0.25)].into();
        let p0_c = prior.marginal("C").unwrap();
        let myc = evaluate(UisKind::Myc, &rs, &prior, &posteriors).unwrap();
        let tsm = evaluate(UisKind::Tsm, &rs, &prior, &posteriors).unwrap();
        assert!((myc["C"] - p0_c).abs() < 1e-12, "MYC ignores negative evidence");
        assert!(tsm["C"] < p0_c, "TSM responds to negative evidence");
        // Direction agrees with the exact update: lowering p(A) lowers p(C)
        // because p(C|A) > p(C).
        let (mxe, _) = maxent::mxe_update(
            &prior,
            &[Constraint::marginal(Formula::atom("A"), 0.25)],
            1e-12,
            10_000,
        )
        .unwrap();
        assert!(mxe.marginal("C").unwrap() < p0_c);
    }

    #[test]
    fn ci_sharp_conjunction_matches_the_bayes_oracle_under_cond_independence() {
        // Joint built to satisfy conditional independence of A1, A2 given C.
        let space = space_named(&["A1", "A2", "C"]);
        let p_c = 0.4;
        let l1t = 0.9; // p(A1|C)
        let l1f = 0.3;
        let l2t = 0.7;
        let l2f = 0.2;
        let mut atoms = vec![0.0; 8];
        for idx in 0..8 {
            let a1 = idx & 1 == 1;
            let a2 = idx >> 1 & 1 == 1;
            let c = idx >> 2 & 1 == 1;
            let pc = if c { p_c } else { 1.0 - p_c };
            let p1 = if c { l1t } else { l1f };
            let p2 = if c { l2t } else { l2f };
            atoms[idx] = pc
                * if a1 { p1 } else { 1.0 - p1 }
                * if a2 { p2 } else { 1.0 - p2 };
        }
        let prior = JointDistribution::new(Arc::clone(&space), atoms).unwrap();
        let rs = RuleSet::new(
            None,
            space,
            [("A1".to_string(), 0.54), ("A2".to_string(), 0.4)].into(),
            vec![Rule {
                consequent: "C".into(),
                antecedent: Formula::parse("(A1 & A2)").unwrap(),
                upper: Strength::Cf(0.5),
                lower: None,
            }],
            vec![],
        )
        .unwrap();
        let posteriors: BTreeMap<String, f64> =
            [("A1".to_string(), 1.0), ("A2".to_string(), 1.0)].into();
        let out = evaluate(UisKind::Ci, &rs, &prior, &posteriors).unwrap();
        let oracle = prior
            .conditional_probability(&Formula::atom("C"), &Formula::parse("(A1 & A2)").unwrap())
            .unwrap();
        assert!((out["C"] - oracle).abs() < 1e-9, "{} vs {oracle}", out["C"]);
    }
}
