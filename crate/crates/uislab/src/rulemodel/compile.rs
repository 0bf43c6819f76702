//! Turning a rule set into maximum-entropy fitting constraints.
//!
//! Leaf priors and extra constraints pass through verbatim. A rule with an
//! absolute strength becomes a conditional constraint directly. A CF-form
//! strength is relative to the consequent's own prior, which the fit itself
//! determines, so those targets are resolved by an outer fixed point:
//! guess the consequent priors, refit, re-read them, repeat.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::calculi::{prob_from_cf, CertaintyFactor};
use crate::joint::{Formula, JointDistribution};
use crate::maxent::{self, Constraint, FitError, FitReport};

use super::{RuleSet, Strength};

/// Consequent-prior movement below which the outer fixed point stops.
const OUTER_TOL: f64 = 1e-8;
const OUTER_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(
        "outer fixed point on CF-form rule strengths did not settle after {OUTER_MAX_ITERS} rounds \
         (last movement {0:.3e})"
    )]
    OuterLoopDiverged(f64),
}

/// A fitted rule set: the maximum-entropy prior plus the constraint list
/// that produced it (CF-form strengths already resolved to conditionals).
#[derive(Debug, Clone)]
pub struct CompiledRuleSet {
    pub prior: JointDistribution,
    pub constraints: Vec<Constraint>,
    pub fit_report: FitReport,
    /// Outer rounds used to resolve CF-form strengths (0 when none).
    pub outer_iterations: usize,
}

/// Fits the maximum-entropy prior for a rule set.
pub fn fit_prior(rs: &RuleSet, tol: f64, max_iters: usize) -> Result<CompiledRuleSet, CompileError> {
    compile(rs, tol, max_iters)
}

pub fn compile(rs: &RuleSet, tol: f64, max_iters: usize) -> Result<CompiledRuleSet, CompileError> {
    let mut fixed: Vec<Constraint> = Vec::new();
    for (name, &p) in &rs.leaf_priors {
        fixed.push(Constraint::marginal(Formula::atom(name), p));
    }
    fixed.extend(rs.extra_constraints.iter().cloned());

    // (consequent, conditioning event, declared cf) pairs still needing
    // their absolute targets.
    let mut dynamic: Vec<(String, Formula, f64)> = Vec::new();
    for rule in &rs.rules {
        match rule.upper {
            Strength::Prob(p) => fixed.push(Constraint::conditional(
                Formula::atom(&rule.consequent),
                rule.antecedent.clone(),
                p,
            )),
            Strength::Cf(cf) => {
                dynamic.push((rule.consequent.clone(), rule.antecedent.clone(), cf))
            }
        }
        if let Some(lower) = rule.lower {
            let not_ant = Formula::not(rule.antecedent.clone());
            match lower {
                Strength::Prob(p) => fixed.push(Constraint::conditional(
                    Formula::atom(&rule.consequent),
                    not_ant,
                    p,
                )),
                Strength::Cf(cf) => dynamic.push((rule.consequent.clone(), not_ant, cf)),
            }
        }
    }

    if dynamic.is_empty() {
        let (prior, fit_report) =
            maxent::fit_max_entropy_prior(Arc::clone(&rs.space), &fixed, tol, max_iters)?;
        return Ok(CompiledRuleSet {
            prior,
            constraints: fixed,
            fit_report,
            outer_iterations: 0,
        });
    }

    // Initial consequent priors from a fit over the fixed constraints only.
    let (initial, _) =
        maxent::fit_max_entropy_prior(Arc::clone(&rs.space), &fixed, tol, max_iters)?;
    let mut consequent_priors = read_consequent_priors(&initial, &dynamic);
    let mut movement = f64::INFINITY;
    for round in 1..=OUTER_MAX_ITERS {
        let mut constraints = fixed.clone();
        for (consequent, event, cf) in &dynamic {
            let p0 = consequent_priors[consequent];
            let target = prob_from_cf(CertaintyFactor::clamped(*cf), p0);
            constraints.push(Constraint::conditional(
                Formula::atom(consequent),
                event.clone(),
                target,
            ));
        }
        let (next, report) =
            maxent::fit_max_entropy_prior(Arc::clone(&rs.space), &constraints, tol, max_iters)?;
        let next_priors = read_consequent_priors(&next, &dynamic);
        movement = consequent_priors
            .iter()
            .map(|(name, &old)| (next_priors[name] - old).abs())
            .fold(0.0, f64::max);
        consequent_priors = next_priors;
        if movement <= OUTER_TOL {
            return Ok(CompiledRuleSet {
                prior: next,
                constraints,
                fit_report: report,
                outer_iterations: round,
            });
        }
    }
    Err(CompileError::OuterLoopDiverged(movement))
}

fn read_consequent_priors(
    dist: &JointDistribution,
    dynamic: &[(String, Formula, f64)],
) -> BTreeMap<String, f64> {
    dynamic
        .iter()
        .map(|(name, _, _)| {
            let p = dist.marginal(name).expect("consequent exists in space");
            (name.clone(), p)
        })
        .collect()
}
