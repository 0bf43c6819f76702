//! Input sweeps: every leaf cycled through four evidence levels, the exact
//! update and each calculus run side by side, scored per trial.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculi::{self, UisKind};
use crate::joint::Formula;
use crate::maxent::{self, Constraint, DEFAULT_MAX_ITERS, DEFAULT_TOL};
use crate::rulemodel::{compile, RuleSet};

use super::{shift_regression, zeta, HarnessError, Regression};

/// Most leaves a sweep will cross (4^n trials).
const MAX_SWEEP_LEAVES: usize = 8;

/// Sweep knobs; the defaults match the documented protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    /// Base evidence levels each leaf cycles through.
    pub levels: Vec<f64>,
    /// Half-width of the uniform jitter around each level.
    pub jitter: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl SweepConfig {
    pub fn new(seed: u64) -> Self {
        SweepConfig {
            seed,
            levels: vec![0.05, 0.35, 0.65, 0.95],
            jitter: 0.01,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
        }
    }
}

/// One consequent's scores in one trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConsequentOutcome {
    pub name: String,
    pub p0: f64,
    pub p_u1: f64,
    pub p_m1: f64,
    pub delta_u: f64,
    pub delta_m: f64,
    pub zeta: f64,
}

/// One trial: a leaf assignment plus per-consequent outcomes, or the error
/// that stopped it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub leaves: BTreeMap<String, f64>,
    pub consequents: Vec<ConsequentOutcome>,
    /// Mean ζ across consequents; NaN when the trial failed.
    pub zeta: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub case_name: String,
    pub uis: UisKind,
    pub seed: u64,
    pub trial_count: usize,
    pub failed_trials: usize,
    pub mean_zeta: f64,
    pub regression: Option<Regression>,
    pub trials: Vec<TrialRecord>,
}

impl SweepReport {
    /// One CSV row per (trial, consequent); failed trials keep their row
    /// with an error message so nothing is silently dropped.
    pub fn to_csv(&self) -> String {
        let leaf_names: Vec<&String> = self
            .trials
            .first()
            .map(|t| t.leaves.keys().collect())
            .unwrap_or_default();
        let mut out = String::from("trial");
        for name in &leaf_names {
            out.push_str(&format!(",{name}"));
        }
        out.push_str(",consequent,p0,p_u1,p_m1,delta_u,delta_m,zeta,error\n");
        for t in &self.trials {
            let mut prefix = t.trial.to_string();
            for name in &leaf_names {
                prefix.push_str(&format!(",{}", t.leaves[*name]));
            }
            if let Some(err) = &t.error {
                out.push_str(&format!("{prefix},,,,,,,,{}\n", err.replace(',', ";")));
                continue;
            }
            for c in &t.consequents {
                out.push_str(&format!(
                    "{prefix},{},{},{},{},{},{},{},\n",
                    c.name, c.p0, c.p_u1, c.p_m1, c.delta_u, c.delta_m, c.zeta
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// The full cross product of evidence levels over the leaves, one jittered
/// draw per (seed, trial, leaf).
pub fn input_grid(
    leaf_count: usize,
    config: &SweepConfig,
) -> Result<Vec<Vec<f64>>, HarnessError> {
    if leaf_count == 0 || leaf_count > MAX_SWEEP_LEAVES {
        return Err(HarnessError::TooManyLeaves(leaf_count));
    }
    let base = config.levels.len();
    let trials = base.pow(leaf_count as u32);
    let mut grid = Vec::with_capacity(trials);
    for trial in 0..trials {
        let mut assignment = Vec::with_capacity(leaf_count);
        let mut code = trial;
        for leaf in 0..leaf_count {
            let level = config.levels[code % base];
            code /= base;
            let value = if config.jitter > 0.0 {
                let mut rng = trial_rng(config.seed, trial as u64, leaf as u64);
                rng.gen_range(level - config.jitter..=level + config.jitter)
            } else {
                level
            };
            assignment.push(value.clamp(0.0, 1.0));
        }
        grid.push(assignment);
    }
    Ok(grid)
}

/// A fresh generator per (seed, trial, leaf) so parallel execution cannot
/// change the draws. SplitMix-style finalizer decorrelates the keys.
fn trial_rng(seed: u64, trial: u64, leaf: u64) -> ChaCha8Rng {
    let mut z = seed
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(trial.wrapping_mul(0xbf58476d1ce4e5b9))
        .wrapping_add(leaf.wrapping_mul(0x94d049bb133111eb))
        .wrapping_add(0x2545f4914f6cdd1d);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

/// Fits the rule set's prior, runs the evidence grid through the exact
/// update and through each requested calculus, and aggregates ζ and the
/// shift regression per calculus.
pub fn run_sweep(
    rs: &RuleSet,
    uis_list: &[UisKind],
    config: &SweepConfig,
) -> Result<Vec<SweepReport>, HarnessError> {
    let compiled = compile(rs, config.tol, config.max_iters)?;
    let prior = &compiled.prior;
    let leaves = rs.leaves();
    let grid = input_grid(leaves.len(), config)?;
    let consequents = rs
        .topological_consequents()
        .map_err(crate::calculi::EvalError::from)?;
    let case_name = rs.name.clone().unwrap_or_else(|| "unnamed".to_string());

    let mut reports = Vec::with_capacity(uis_list.len());
    for &uis in uis_list {
        // Trials are independent; indexed parallel map keeps the output
        // order (and therefore the CSV bytes) identical to a serial run.
        let trials: Vec<TrialRecord> = grid
            .par_iter()
            .enumerate()
            .map(|(trial, assignment)| {
                run_trial(rs, prior, uis, &leaves, &consequents, trial, assignment, config)
            })
            .collect();
        let failed_trials = trials.iter().filter(|t| t.error.is_some()).count();
        let scored: Vec<&TrialRecord> = trials.iter().filter(|t| t.error.is_none()).collect();
        let mean_zeta = if scored.is_empty() {
            f64::NAN
        } else {
            scored.iter().map(|t| t.zeta).sum::<f64>() / scored.len() as f64
        };
        let shifts: Vec<(f64, f64)> = scored
            .iter()
            .flat_map(|t| t.consequents.iter().map(|c| (c.delta_m, c.delta_u)))
            .collect();
        let regression = shift_regression(&shifts).ok();
        reports.push(SweepReport {
            case_name: case_name.clone(),
            uis,
            seed: config.seed,
            trial_count: trials.len(),
            failed_trials,
            mean_zeta,
            regression,
            trials,
        });
    }
    Ok(reports)
}

#[allow(clippy::too_many_arguments)]
fn run_trial(
    rs: &RuleSet,
    prior: &crate::joint::JointDistribution,
    uis: UisKind,
    leaves: &[String],
    consequents: &[String],
    trial: usize,
    assignment: &[f64],
    config: &SweepConfig,
) -> TrialRecord {
    let leaf_map: BTreeMap<String, f64> = leaves
        .iter()
        .cloned()
        .zip(assignment.iter().copied())
        .collect();
    let mut record = TrialRecord {
        trial,
        leaves: leaf_map.clone(),
        consequents: Vec::new(),
        zeta: f64::NAN,
        error: None,
    };
    let constraints: Vec<Constraint> = leaves
        .iter()
        .zip(assignment)
        .map(|(name, &p)| Constraint::marginal(Formula::atom(name), p))
        .collect();
    let exact = match maxent::mxe_update(prior, &constraints, config.tol, config.max_iters) {
        Ok((dist, _)) => dist,
        Err(e) => {
            record.error = Some(format!("exact update failed: {e}"));
            return record;
        }
    };
    let heuristic = match calculi::evaluate(uis, rs, prior, &leaf_map) {
        Ok(out) => out,
        Err(e) => {
            record.error = Some(format!("{} evaluation failed: {e}", uis.name()));
            return record;
        }
    };
    for name in consequents {
        let p0 = match prior.marginal(name) {
            Ok(p) => p,
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        };
        let p_m1 = match exact.marginal(name) {
            Ok(p) => p,
            Err(e) => {
                record.error = Some(e.to_string());
                return record;
            }
        };
        let p_u1 = heuristic[name];
        let z = match zeta(p_u1, p_m1, p0) {
            Ok(z) => z,
            Err(e) => {
                record.error = Some(format!("scoring `{name}` failed: {e}"));
                return record;
            }
        };
        record.consequents.push(ConsequentOutcome {
            name: name.clone(),
            p0,
            p_u1,
            p_m1,
            delta_u: p_u1 - p0,
            delta_m: p_m1 - p0,
            zeta: z,
        });
    }
    record.zeta = record.consequents.iter().map(|c| c.zeta).sum::<f64>()
        / record.consequents.len() as f64;
    record
}
