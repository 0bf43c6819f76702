//! Comparison experiments: the ζ performance metric, input sweeps, shift
//! regression, bias tables, and the algebraic diagnostics.

mod diagnostics;
mod sweep;
mod tables;

use serde::{Deserialize, Serialize};

pub use diagnostics::{
    demorgan_audit, one_datum_diagnostic, rule_or_independence_check, AuditEngine,
    DeMorganAudit, IndependenceCheck, OneDatumBranch, OneDatumReport,
};
pub use sweep::{input_grid, run_sweep, ConsequentOutcome, SweepConfig, SweepReport, TrialRecord};
pub use tables::{
    bias_table, builtin_prior, named_table, BiasRow, CorrelationSign, TableDoc, TableMode,
    TableRow,
};

use crate::calculi::CalculusError;
use crate::joint::JointError;
use crate::maxent::FitError;
use crate::rulemodel::CompileError;

#[derive(Debug, Clone, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Eval(#[from] crate::calculi::EvalError),
    #[error("probability {0} outside [0, 1]")]
    OutOfRange(f64),
    #[error("zeta undefined: expected squared error {mu} with worst case {worst}")]
    DegenerateMetric { mu: f64, worst: f64 },
    #[error("regression needs at least 3 trials with variance in the exact shift")]
    DegenerateRegression,
    #[error("{0} leaves would need 4^{0} trials; the cap is 8")]
    TooManyLeaves(usize),
    #[error("unknown table `{0}` (expected 3-1, 3-2, 3-3 or 3-4)")]
    UnknownTable(String),
}

/// Mean squared error of a uniformly random certainty factor converted
/// against `p0`, relative to the exact answer `p_m1`.
///
/// Closed form of ∫ (prob_from_cf(c, p0) − p_m1)² dc / 2 over c ∈ [−1, 1].
pub fn expected_sq_error(p_m1: f64, p0: f64) -> Result<f64, HarnessError> {
    for v in [p_m1, p0] {
        if !(0.0..=1.0).contains(&v) {
            return Err(HarnessError::OutOfRange(v));
        }
    }
    Ok(
        (2.0 * p0 * p0 - 6.0 * p_m1 * p0 + 6.0 * p_m1 * p_m1 + 1.0 + p0 - 3.0 * p_m1) / 6.0,
    )
}

/// Normalized performance score in [−1, 1]: 1 at zero error, 0 when the
/// squared error equals the random-guessing expectation, −1 at the worst
/// possible squared error, linear in the squared error between the anchors.
pub fn zeta(p_u1: f64, p_m1: f64, p0: f64) -> Result<f64, HarnessError> {
    for v in [p_u1, p_m1, p0] {
        if !(0.0..=1.0).contains(&v) {
            return Err(HarnessError::OutOfRange(v));
        }
    }
    let err_sq = (p_u1 - p_m1) * (p_u1 - p_m1);
    let mu = expected_sq_error(p_m1, p0)?;
    let worst = p_m1.max(1.0 - p_m1).powi(2);
    if mu <= 0.0 || worst <= mu {
        if err_sq == 0.0 {
            return Ok(1.0);
        }
        return Err(HarnessError::DegenerateMetric { mu, worst });
    }
    Ok(if err_sq <= mu {
        1.0 - err_sq / mu
    } else {
        -(err_sq - mu) / (worst - mu)
    })
}

/// Ordinary least squares of the UIS shift on the exact shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Fits Δ_U = slope·Δ_M + intercept over (Δ_M, Δ_U) pairs.
pub fn shift_regression(shifts: &[(f64, f64)]) -> Result<Regression, HarnessError> {
    if shifts.len() < 3 {
        return Err(HarnessError::DegenerateRegression);
    }
    let n = shifts.len() as f64;
    let mean_m = shifts.iter().map(|s| s.0).sum::<f64>() / n;
    let mean_u = shifts.iter().map(|s| s.1).sum::<f64>() / n;
    let mut ss_mm = 0.0;
    let mut ss_mu = 0.0;
    let mut ss_uu = 0.0;
    for &(m, u) in shifts {
        ss_mm += (m - mean_m) * (m - mean_m);
        ss_mu += (m - mean_m) * (u - mean_u);
        ss_uu += (u - mean_u) * (u - mean_u);
    }
    if ss_mm <= 0.0 {
        return Err(HarnessError::DegenerateRegression);
    }
    let slope = ss_mu / ss_mm;
    let intercept = mean_u - slope * mean_m;
    let r_squared = if ss_uu <= 0.0 {
        1.0 // constant response fitted exactly by the horizontal line
    } else {
        (ss_mu * ss_mu) / (ss_mm * ss_uu)
    };
    Ok(Regression {
        slope,
        intercept,
        r_squared,
    })
}
