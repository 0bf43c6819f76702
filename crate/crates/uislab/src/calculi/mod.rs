//! The heuristic uncertain inference systems and the certainty-factor /
//! probability conversions that make them comparable to exact updating.
//!
//! A certainty factor encodes *change* in belief relative to a prior:
//! +1 certainly true, 0 no change, −1 certainly false. Conversion to and
//! from probability is piecewise linear in the prior.

mod evaluate;

use serde::{Deserialize, Serialize};

pub use evaluate::{evaluate, EvalError};

/// Which calculus propagates the evidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UisKind {
    /// MYCIN certainty factors.
    Myc,
    /// Two-Sided Mycin: modus ponens also responds to negative CFs.
    Tsm,
    /// Conditional-independence odds/likelihood calculus.
    Ci,
}

impl UisKind {
    pub const ALL: [UisKind; 3] = [UisKind::Myc, UisKind::Tsm, UisKind::Ci];

    pub fn name(self) -> &'static str {
        match self {
            UisKind::Myc => "myc",
            UisKind::Tsm => "tsm",
            UisKind::Ci => "ci",
        }
    }
}

impl std::str::FromStr for UisKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "myc" => Ok(UisKind::Myc),
            "tsm" => Ok(UisKind::Tsm),
            "ci" => Ok(UisKind::Ci),
            other => Err(format!("unknown UIS `{other}` (expected myc, tsm or ci)")),
        }
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum CalculusError {
    #[error("certainty factor {0} outside [-1, 1]")]
    OutOfRange(f64),
    #[error("empty certainty-factor list")]
    EmptyList,
    #[error("conversion undefined: prior {p0} cannot move toward {p1}")]
    DegenerateAnchor { p0: f64, p1: f64 },
    #[error("cannot combine certainty +1 with certainty -1")]
    ContradictoryCertainty,
    #[error("likelihood table is degenerate: odds factor denominator is zero")]
    ZeroDenominator,
}

/// Change-in-belief value in [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct CertaintyFactor(f64);

impl CertaintyFactor {
    pub fn new(value: f64) -> Result<Self, CalculusError> {
        if !(-1.0..=1.0).contains(&value) {
            return Err(CalculusError::OutOfRange(value));
        }
        Ok(CertaintyFactor(value))
    }

    /// Clamps into [−1, 1]; for values produced by arithmetic that may
    /// drift a few ulps outside the interval.
    pub fn clamped(value: f64) -> Self {
        CertaintyFactor(value.clamp(-1.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Posterior probability implied by a CF against the prior `p0`:
/// linear from p0 up to 1 for positive CFs, down to 0 for negative ones.
pub fn prob_from_cf(cf: CertaintyFactor, p0: f64) -> f64 {
    let c = cf.value();
    let p = if c >= 0.0 {
        p0 + c * (1.0 - p0)
    } else {
        p0 * (1.0 + c)
    };
    p.clamp(0.0, 1.0)
}

/// Inverse of [`prob_from_cf`]: the CF that moves `p0` to `p1`.
pub fn cf_from_probs(p1: f64, p0: f64) -> Result<CertaintyFactor, CalculusError> {
    if p1 >= p0 {
        if p0 >= 1.0 {
            if p1 > p0 {
                return Err(CalculusError::DegenerateAnchor { p0, p1 });
            }
            return Ok(CertaintyFactor(0.0));
        }
        Ok(CertaintyFactor::clamped((p1 - p0) / (1.0 - p0)))
    } else {
        if p0 <= 0.0 {
            return Err(CalculusError::DegenerateAnchor { p0, p1 });
        }
        Ok(CertaintyFactor::clamped((p1 - p0) / p0))
    }
}

/// CF of a conjunction: the minimum.
pub fn cf_and(cfs: &[CertaintyFactor]) -> Result<CertaintyFactor, CalculusError> {
    cfs.iter()
        .copied()
        .min_by(|a, b| a.value().total_cmp(&b.value()))
        .ok_or(CalculusError::EmptyList)
}

/// CF of a disjunction: the maximum.
pub fn cf_or(cfs: &[CertaintyFactor]) -> Result<CertaintyFactor, CalculusError> {
    cfs.iter()
        .copied()
        .max_by(|a, b| a.value().total_cmp(&b.value()))
        .ok_or(CalculusError::EmptyList)
}

/// CF of a negation: sign flip.
pub fn cf_not(cf: CertaintyFactor) -> CertaintyFactor {
    CertaintyFactor(-cf.value())
}

/// MYCIN modus ponens: scales the rule CF by a non-negative antecedent CF
/// and ignores negative ones entirely.
pub fn myc_modus_ponens(rule_cf: CertaintyFactor, antecedent_cf: CertaintyFactor) -> CertaintyFactor {
    if antecedent_cf.value() >= 0.0 {
        CertaintyFactor::clamped(rule_cf.value() * antecedent_cf.value())
    } else {
        CertaintyFactor(0.0)
    }
}

/// Two-sided modus ponens: a negative antecedent CF engages the lower rule
/// strength when one is given, otherwise the mirrored upper strength.
pub fn tsm_modus_ponens(
    upper_cf: CertaintyFactor,
    lower_cf: Option<CertaintyFactor>,
    antecedent_cf: CertaintyFactor,
) -> CertaintyFactor {
    let a = antecedent_cf.value();
    if a >= 0.0 {
        CertaintyFactor::clamped(upper_cf.value() * a)
    } else {
        match lower_cf {
            Some(lower) => CertaintyFactor::clamped(lower.value() * a.abs()),
            None => CertaintyFactor::clamped(-upper_cf.value() * a.abs()),
        }
    }
}

/// Parallel combination of two rules bearing on one consequent.
/// Commutative and associative.
pub fn combine_parallel(
    x: CertaintyFactor,
    y: CertaintyFactor,
) -> Result<CertaintyFactor, CalculusError> {
    let (x, y) = (x.value(), y.value());
    let z = if x >= 0.0 && y >= 0.0 {
        x + y - x * y
    } else if x <= 0.0 && y <= 0.0 {
        x + y + x * y
    } else {
        let denom = 1.0 - x.abs().min(y.abs());
        if denom <= 0.0 {
            return Err(CalculusError::ContradictoryCertainty);
        }
        (x + y) / denom
    };
    Ok(CertaintyFactor::clamped(z))
}

/// Per-antecedent likelihoods and the consequent prior used by the
/// conditional-independence calculus.
#[derive(Debug, Clone)]
pub struct CiParameters {
    /// p0(C).
    pub prior0: f64,
    /// One entry per antecedent occurrence across all rules for C.
    pub leaves: Vec<CiLeaf>,
}

#[derive(Debug, Clone)]
pub struct CiLeaf {
    pub name: String,
    /// Antecedent appears negated in its rule.
    pub negated: bool,
    /// Prior probability of the (possibly negated) literal.
    pub prior: f64,
    /// p0(literal | C).
    pub likelihood_true: f64,
    /// p0(literal | ¬C).
    pub likelihood_false: f64,
}

/// Soft-evidence odds update: the posterior odds of C are the prior odds
/// times one interpolated likelihood-ratio factor per antecedent.
///
/// `leaf_posteriors` gives the posterior probability of each leaf's *atom*
/// (not the literal); leaves without an entry stay at their prior.
pub fn ci_update(
    params: &CiParameters,
    leaf_posteriors: &std::collections::BTreeMap<String, f64>,
) -> Result<f64, CalculusError> {
    if params.prior0 <= 0.0 {
        return Ok(0.0);
    }
    if params.prior0 >= 1.0 {
        return Ok(1.0);
    }
    let mut odds = params.prior0 / (1.0 - params.prior0);
    for leaf in &params.leaves {
        let atom_posterior = leaf_posteriors.get(&leaf.name).copied();
        let a = match atom_posterior {
            Some(p) if leaf.negated => 1.0 - p,
            Some(p) => p,
            None => leaf.prior,
        };
        let num = leaf.likelihood_true * a + (1.0 - leaf.likelihood_true) * (1.0 - a);
        let den = leaf.likelihood_false * a + (1.0 - leaf.likelihood_false) * (1.0 - a);
        if den <= 0.0 {
            if num <= 0.0 {
                return Err(CalculusError::ZeroDenominator);
            }
            return Ok(1.0);
        }
        odds *= num / den;
    }
    Ok(odds / (1.0 + odds))
}
