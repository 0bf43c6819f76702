//! Bias tables: heuristic CF combination versus the exact update, over a
//! two-proposition prior with a chosen correlation.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculi::{
    cf_and, cf_from_probs, cf_or, combine_parallel, prob_from_cf, CertaintyFactor,
};
use crate::joint::{Formula, JointDistribution, PropositionSpace};
use crate::maxent::{self, Constraint, DEFAULT_MAX_ITERS, DEFAULT_TOL};

use super::HarnessError;

/// Which compound event the table scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableMode {
    /// Conjunction; heuristic column is the min rule.
    And,
    /// Disjunction; heuristic columns are the max rule and parallel
    /// combination ("rule-or").
    Or,
}

/// Sign of the A1/A2 correlation in the built-in two-proposition priors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CorrelationSign {
    Negative,
    Zero,
    Positive,
}

impl CorrelationSign {
    pub fn label(self) -> &'static str {
        match self {
            CorrelationSign::Negative => "negative",
            CorrelationSign::Zero => "zero",
            CorrelationSign::Positive => "positive",
        }
    }

    /// p(A1 & A2) in the built-in prior with both marginals at one half.
    fn conjunction_mass(self) -> f64 {
        match self {
            CorrelationSign::Negative => 1.0 / 9.0,
            CorrelationSign::Zero => 0.25,
            CorrelationSign::Positive => 0.389,
        }
    }
}

/// The two-proposition prior with p(A1) = p(A2) = 1/2 and the stated
/// conjunction probability. With symmetric marginals the atom masses are
/// fully determined.
pub fn builtin_prior(sign: CorrelationSign) -> JointDistribution {
    let space = Arc::new(
        PropositionSpace::new(vec!["A1".into(), "A2".into()]).expect("two names are valid"),
    );
    let tt = sign.conjunction_mass();
    let side = 0.5 - tt;
    JointDistribution::new(space, vec![tt, side, side, tt]).expect("masses normalize")
}

/// One table row: a CF pair, the heuristic combinations and the exact one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BiasRow {
    pub cf_a: f64,
    pub cf_b: f64,
    /// min (And) or max (Or) of the pair.
    pub cf_heuristic: f64,
    /// Parallel combination; present in Or mode only.
    pub cf_rule_or: Option<f64>,
    /// CF read back from the exact posterior of the compound event.
    pub cf_mxe: f64,
    /// Exact posterior probability of the compound event.
    pub posterior_mxe: f64,
    /// Posterior implied by the heuristic CF against the compound prior.
    pub posterior_heuristic: f64,
}

/// Converts each CF pair to leaf posteriors against the prior, runs the
/// exact update, and reads the compound event back as a CF alongside the
/// heuristic combinations.
pub fn bias_table(
    prior: &JointDistribution,
    pairs: &[(f64, f64)],
    mode: TableMode,
) -> Result<Vec<BiasRow>, HarnessError> {
    let a1 = Formula::atom("A1");
    let a2 = Formula::atom("A2");
    let compound = match mode {
        TableMode::And => Formula::and2(a1.clone(), a2.clone()),
        TableMode::Or => Formula::or2(a1.clone(), a2.clone()),
    };
    let p0_a1 = prior.probability(&a1)?;
    let p0_a2 = prior.probability(&a2)?;
    let p0_compound = prior.probability(&compound)?;
    let mut rows = Vec::with_capacity(pairs.len());
    for &(raw_a, raw_b) in pairs {
        let cf_a = CertaintyFactor::new(raw_a)?;
        let cf_b = CertaintyFactor::new(raw_b)?;
        let heuristic = match mode {
            TableMode::And => cf_and(&[cf_a, cf_b])?,
            TableMode::Or => cf_or(&[cf_a, cf_b])?,
        };
        let cf_rule_or = match mode {
            TableMode::And => None,
            TableMode::Or => Some(combine_parallel(cf_a, cf_b)?.value()),
        };
        let constraints = [
            Constraint::marginal(a1.clone(), prob_from_cf(cf_a, p0_a1)),
            Constraint::marginal(a2.clone(), prob_from_cf(cf_b, p0_a2)),
        ];
        let (posterior, _) =
            maxent::mxe_update(prior, &constraints, DEFAULT_TOL, DEFAULT_MAX_ITERS)?;
        let posterior_mxe = posterior.probability(&compound)?;
        let cf_mxe = cf_from_probs(posterior_mxe, p0_compound)?.value();
        rows.push(BiasRow {
            cf_a: raw_a,
            cf_b: raw_b,
            cf_heuristic: heuristic.value(),
            cf_rule_or,
            cf_mxe,
            posterior_mxe,
            posterior_heuristic: prob_from_cf(heuristic, p0_compound),
        });
    }
    Ok(rows)
}

/// A rendered table: column names plus labeled numeric rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableDoc {
    pub id: String,
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub values: Vec<f64>,
}

impl TableDoc {
    /// Aligned fixed-width text rendering.
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.title);
        let mut header = format!("{:<14}", "");
        for c in &self.columns {
            header.push_str(&format!("{c:>12}"));
        }
        out.push_str(&header);
        out.push('\n');
        for row in &self.rows {
            let mut line = format!("{:<14}", row.label);
            for v in &row.values {
                line.push_str(&format!("{v:>12.4}"));
            }
            out.push_str(&line);
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for c in &self.columns {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.label);
            for v in &row.values {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

const SIGN_PAIRS: [(f64, f64); 3] = [(0.8, 0.8), (0.8, -0.8), (-0.8, -0.8)];

/// The built-in comparison tables, reproducible with zero configuration:
/// `and-neg`, `and-pos`, `or-flat` and `or-corr` (aliases `3-1`…`3-4`).
pub fn named_table(id: &str) -> Result<TableDoc, HarnessError> {
    match id {
        "3-1" | "and-neg" => and_table(
            "3-1",
            "Conjunction bias under negative correlation (p(A1&A2) = 1/9)",
            CorrelationSign::Negative,
        ),
        "3-2" | "and-pos" => and_table(
            "3-2",
            "Conjunction bias under positive correlation (p(A1&A2) = 0.389)",
            CorrelationSign::Positive,
        ),
        "3-3" | "or-flat" => or_flat_table(),
        "3-4" | "or-corr" => or_correlation_table(),
        other => Err(HarnessError::UnknownTable(other.to_string())),
    }
}

fn and_table(id: &str, title: &str, sign: CorrelationSign) -> Result<TableDoc, HarnessError> {
    let prior = builtin_prior(sign);
    let rows = bias_table(&prior, &SIGN_PAIRS, TableMode::And)?;
    Ok(TableDoc {
        id: id.to_string(),
        title: title.to_string(),
        columns: vec![
            "cf(A1)".into(),
            "cf(A2)".into(),
            "myc-and".into(),
            "mxe-and".into(),
            "p1(A1&A2)".into(),
        ],
        rows: rows
            .into_iter()
            .map(|r| TableRow {
                label: pair_label(r.cf_a, r.cf_b),
                values: vec![r.cf_a, r.cf_b, r.cf_heuristic, r.cf_mxe, r.posterior_mxe],
            })
            .collect(),
    })
}

fn or_flat_table() -> Result<TableDoc, HarnessError> {
    let prior = builtin_prior(CorrelationSign::Zero);
    let pairs = [(0.8, 0.8), (0.8, -0.8), (0.4, 0.4), (-0.8, -0.8)];
    let rows = bias_table(&prior, &pairs, TableMode::Or)?;
    Ok(TableDoc {
        id: "3-3".into(),
        title: "Disjunction bias on the independent prior".into(),
        columns: vec![
            "cf(A1)".into(),
            "cf(A2)".into(),
            "myc-or".into(),
            "rule-or".into(),
            "mxe-or".into(),
        ],
        rows: rows
            .into_iter()
            .map(|r| TableRow {
                label: pair_label(r.cf_a, r.cf_b),
                values: vec![
                    r.cf_a,
                    r.cf_b,
                    r.cf_heuristic,
                    r.cf_rule_or.expect("or mode"),
                    r.cf_mxe,
                ],
            })
            .collect(),
    })
}

fn or_correlation_table() -> Result<TableDoc, HarnessError> {
    let mut rows = Vec::new();
    for sign in [
        CorrelationSign::Negative,
        CorrelationSign::Zero,
        CorrelationSign::Positive,
    ] {
        let prior = builtin_prior(sign);
        let row = bias_table(&prior, &[(-0.8, -0.8)], TableMode::Or)?.remove(0);
        rows.push(TableRow {
            label: sign.label().to_string(),
            values: vec![
                row.cf_a,
                row.cf_b,
                row.cf_rule_or.expect("or mode"),
                row.cf_mxe,
            ],
        });
    }
    Ok(TableDoc {
        id: "3-4".into(),
        title: "rule-or versus the exact update across correlations, cfs (-0.8, -0.8)".into(),
        columns: vec![
            "cf(A1)".into(),
            "cf(A2)".into(),
            "rule-or".into(),
            "mxe-or".into(),
        ],
        rows,
    })
}

fn pair_label(a: f64, b: f64) -> String {
    format!("({a:+.1},{b:+.1})")
}
