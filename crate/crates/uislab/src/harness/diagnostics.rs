//! Algebraic diagnostics: the one-datum reading of the min/max rules, the
//! DeMorgan audit, and the independence identity behind parallel
//! combination of disjunctive evidence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calculi::{cf_and, combine_parallel, prob_from_cf, CertaintyFactor};
use crate::joint::{EventPartition, Formula, JointDistribution};
use crate::maxent::{self, Constraint, DEFAULT_MAX_ITERS, DEFAULT_TOL};

use super::{HarnessError, TableMode};

/// Which equivalence the dominant datum triggers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OneDatumBranch {
    /// The min/max result equals the full exact update run with only the
    /// dominant leaf's constraint (the other datum is ignored outright).
    IgnoresWeakerDatum,
    /// The min/max result equals a Jeffrey update that rescales the
    /// compound event by the dominant leaf's probability ratio — the
    /// "assume one antecedent subsumes the other" reading.
    ScalesCompoundEvent,
}

/// Outcome of checking the one-datum equivalence for one CF pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneDatumReport {
    pub mode: TableMode,
    pub cf_a: f64,
    pub cf_b: f64,
    pub branch: OneDatumBranch,
    /// Index (0 or 1) of the datum that the min/max rule keeps.
    pub dominant: usize,
    /// Posterior of the compound event under the heuristic.
    pub heuristic_posterior: f64,
    /// Posterior under the matching one-datum exact update.
    pub reference_posterior: f64,
    pub gap: f64,
}

/// Checks that combining two leaf CFs with min (And) or max (Or) agrees
/// with an exact update that uses only the dominant datum.
pub fn one_datum_diagnostic(
    prior: &JointDistribution,
    cf_pair: (f64, f64),
    mode: TableMode,
) -> Result<OneDatumReport, HarnessError> {
    let cf_a = CertaintyFactor::new(cf_pair.0)?;
    let cf_b = CertaintyFactor::new(cf_pair.1)?;
    let a1 = Formula::atom("A1");
    let a2 = Formula::atom("A2");
    let compound = match mode {
        TableMode::And => Formula::and2(a1.clone(), a2.clone()),
        TableMode::Or => Formula::or2(a1.clone(), a2.clone()),
    };
    // The min rule keeps the smaller CF; the max rule the larger.
    let dominant = match mode {
        TableMode::And if cf_b.value() < cf_a.value() => 1,
        TableMode::Or if cf_b.value() > cf_a.value() => 1,
        _ => 0,
    };
    let (dom_cf, dom_formula) = if dominant == 0 {
        (cf_a, a1)
    } else {
        (cf_b, a2)
    };
    let heuristic_cf = match mode {
        TableMode::And => cf_and(&[cf_a, cf_b])?,
        TableMode::Or => crate::calculi::cf_or(&[cf_a, cf_b])?,
    };
    let p0_compound = prior.probability(&compound)?;
    let heuristic_posterior = prob_from_cf(heuristic_cf, p0_compound);

    let p0_dom = prior.probability(&dom_formula)?;
    let p1_dom = prob_from_cf(dom_cf, p0_dom);
    // Moving with the sign of the dominant CF keeps the min/max result an
    // exact single-constraint update; moving against it needs the
    // compound-event rescaling instead.
    let exact_single = match mode {
        TableMode::And => dom_cf.value() <= 0.0,
        TableMode::Or => dom_cf.value() >= 0.0,
    };
    let (branch, reference_posterior) = if exact_single {
        let constraints = [Constraint::marginal(dom_formula.clone(), p1_dom)];
        let (updated, _) = maxent::mxe_update(prior, &constraints, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
        (
            OneDatumBranch::IgnoresWeakerDatum,
            updated.probability(&compound)?,
        )
    } else {
        // Rescale the compound event by the dominant datum's ratio: the
        // conjunction shrinks with p(¬dom), the disjunction grows with
        // p(dom).
        let target = match mode {
            TableMode::And => {
                let ratio = (1.0 - p1_dom) / (1.0 - p0_dom);
                1.0 - (1.0 - p0_compound) * ratio
            }
            TableMode::Or => p0_compound * (p1_dom / p0_dom),
        };
        let partition = EventPartition::binary(compound.clone(), target.clamp(0.0, 1.0))?;
        let updated = prior.jeffrey_update(&partition)?;
        (
            OneDatumBranch::ScalesCompoundEvent,
            updated.probability(&compound)?,
        )
    };
    Ok(OneDatumReport {
        mode,
        cf_a: cf_pair.0,
        cf_b: cf_pair.1,
        branch,
        dominant,
        heuristic_posterior,
        reference_posterior,
        gap: (heuristic_posterior - reference_posterior).abs(),
    })
}

/// Which machinery computes both sides of the DeMorgan comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditEngine {
    /// Heuristic CF operations: rule-or directly versus the min rule on the
    /// negated CFs through the complement.
    RuleOr,
    /// Exact updates on both paths; obeys DeMorgan by construction.
    Mxe,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeMorganAudit {
    pub engine: AuditEngine,
    pub max_discrepancy: f64,
    pub worst_pair: (f64, f64),
}

/// Compares the posterior of (A1 or A2) computed directly against the one
/// computed through ¬(¬A1 & ¬A2), over the given CF pairs.
pub fn demorgan_audit(
    prior: &JointDistribution,
    pairs: &[(f64, f64)],
    engine: AuditEngine,
) -> Result<DeMorganAudit, HarnessError> {
    let a1 = Formula::atom("A1");
    let a2 = Formula::atom("A2");
    let disj = Formula::or2(a1.clone(), a2.clone());
    let neg_conj = Formula::and2(Formula::not(a1.clone()), Formula::not(a2.clone()));
    let p0_disj = prior.probability(&disj)?;
    let p0_neg_conj = prior.probability(&neg_conj)?;
    let p0_a1 = prior.probability(&a1)?;
    let p0_a2 = prior.probability(&a2)?;
    let mut worst = DeMorganAudit {
        engine,
        max_discrepancy: 0.0,
        worst_pair: (0.0, 0.0),
    };
    for &(raw_a, raw_b) in pairs {
        let cf_a = CertaintyFactor::new(raw_a)?;
        let cf_b = CertaintyFactor::new(raw_b)?;
        let (direct, via_complement) = match engine {
            AuditEngine::RuleOr => {
                let direct = prob_from_cf(combine_parallel(cf_a, cf_b)?, p0_disj);
                let neg_cf = cf_and(&[
                    crate::calculi::cf_not(cf_a),
                    crate::calculi::cf_not(cf_b),
                ])?;
                (direct, 1.0 - prob_from_cf(neg_cf, p0_neg_conj))
            }
            AuditEngine::Mxe => {
                let constraints = [
                    Constraint::marginal(a1.clone(), prob_from_cf(cf_a, p0_a1)),
                    Constraint::marginal(a2.clone(), prob_from_cf(cf_b, p0_a2)),
                ];
                let (updated, _) =
                    maxent::mxe_update(prior, &constraints, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
                (
                    updated.probability(&disj)?,
                    1.0 - updated.probability(&neg_conj)?,
                )
            }
        };
        let discrepancy = (direct - via_complement).abs();
        if discrepancy > worst.max_discrepancy {
            worst.max_discrepancy = discrepancy;
            worst.worst_pair = (raw_a, raw_b);
        }
    }
    Ok(worst)
}

/// Result of checking the identity behind parallel combination of
/// independent positive evidence, and the infeasibility of its
/// both-negative counterpart.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IndependenceCheck {
    pub samples: usize,
    /// Largest gap seen in the positive-side identity.
    pub max_identity_gap: f64,
    pub identity_holds: bool,
    /// Counterexamples found to the negative-side infeasibility claim.
    pub infeasibility_counterexamples: usize,
}

impl IndependenceCheck {
    pub fn passed(&self) -> bool {
        self.identity_holds && self.infeasibility_counterexamples == 0
    }
}

/// Over random (A0, A1, B0, B1) tuples:
///
/// - rising case (A1 ≥ A0, B1 ≥ B0): the CF of (A or B) computed from
///   probabilities under independence equals cf(A) + cf(B) − cf(A)cf(B)
///   identically;
/// - falling case (A1 < A0, B1 < B0): the matching equality would need
///   1/A1 + 1/B1 = 1/A0 + 1/B0, whose left side is always strictly larger.
pub fn rule_or_independence_check(samples: usize, seed: u64) -> IndependenceCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_gap: f64 = 0.0;
    let mut counterexamples = 0usize;
    // Priors kept off the endpoints so the 1e-12 tolerance is meaningful.
    let interior = 0.05..0.95;
    for _ in 0..samples {
        let a0: f64 = rng.gen_range(interior.clone());
        let b0: f64 = rng.gen_range(interior.clone());

        // Rising side: posteriors above the priors.
        let a1 = rng.gen_range(a0..=1.0);
        let b1 = rng.gen_range(b0..=1.0);
        let cf_a = (a1 - a0) / (1.0 - a0);
        let cf_b = (b1 - b0) / (1.0 - b0);
        let rule_or = cf_a + cf_b - cf_a * cf_b;
        let p0_or = a0 + b0 - a0 * b0;
        let p1_or = a1 + b1 - a1 * b1;
        let cf_independent = (p1_or - p0_or) / (1.0 - p0_or);
        max_gap = max_gap.max((rule_or - cf_independent).abs());

        // Falling side: posteriors strictly below the priors.
        let a1 = rng.gen_range(0.001..a0);
        let b1 = rng.gen_range(0.001..b0);
        let left = 1.0 / a1 + 1.0 / b1;
        let right = 1.0 / a0 + 1.0 / b0;
        if left <= right {
            counterexamples += 1;
        }
    }
    IndependenceCheck {
        samples,
        max_identity_gap: max_gap,
        identity_holds: max_gap <= 1e-12,
        infeasibility_counterexamples: counterexamples,
    }
}
