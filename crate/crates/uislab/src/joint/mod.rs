//! Exact joint distributions over boolean propositions.
//!
//! A distribution is a dense vector of 2^n atom probabilities, where bit i
//! of the atom index is the truth value of proposition i in declaration
//! order. Everything here is immutable after construction; operations
//! return fresh values.

mod formula;

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use formula::{Formula, FormulaParseError};

/// Hard cap on proposition count; the atom vector has 2^n entries.
pub const MAX_PROPS: usize = 20;

/// Tolerance for "atoms sum to one" on construction.
const SUM_TOL: f64 = 1e-12;
/// Tolerance for partition targets summing to one.
const PARTITION_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, thiserror::Error)]
pub enum JointError {
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("duplicate proposition `{0}`")]
    DuplicateProposition(String),
    #[error("proposition name must be non-empty")]
    EmptyName,
    #[error("{0} propositions exceed the cap of {MAX_PROPS}")]
    TooManyPropositions(usize),
    #[error("at least one proposition is required")]
    NoPropositions,
    #[error("and/or nodes need at least two children")]
    ArityTooSmall,
    #[error("atom vector has length {got}, expected {expected}")]
    WrongAtomCount { got: usize, expected: usize },
    #[error("atom {index} is negative ({value})")]
    NegativeAtom { index: usize, value: f64 },
    #[error("atoms sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("conditioning event has probability zero")]
    ZeroConditioningEvent,
    #[error("partition cell {cell} has zero prior probability but target {target}")]
    ZeroPriorCell { cell: usize, target: f64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("negative partition target {0}")]
    NegativeTarget(f64),
    #[error("partition targets sum to {0}, not 1")]
    TargetsNotNormalized(f64),
    #[error("KL divergence undefined: atom {0} has mass but the reference does not")]
    AbsoluteContinuityViolation(usize),
}

/// Ordered set of distinct proposition names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropositionSpace {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl PropositionSpace {
    pub fn new(names: Vec<String>) -> Result<Self, JointError> {
        if names.is_empty() {
            return Err(JointError::NoPropositions);
        }
        if names.len() > MAX_PROPS {
            return Err(JointError::TooManyPropositions(names.len()));
        }
        let mut index = HashMap::new();
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(JointError::EmptyName);
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(JointError::DuplicateProposition(name.clone()));
            }
        }
        Ok(PropositionSpace { names, index })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn atom_count(&self) -> usize {
        1 << self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Result<usize, JointError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| JointError::UnknownProposition(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

/// Exact probability vector over the 2^n truth assignments.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    space: Arc<PropositionSpace>,
    atoms: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistOnDisk {
    props: Vec<String>,
    atoms: Vec<f64>,
}

impl JointDistribution {
    pub fn new(space: Arc<PropositionSpace>, atoms: Vec<f64>) -> Result<Self, JointError> {
        if atoms.len() != space.atom_count() {
            return Err(JointError::WrongAtomCount {
                got: atoms.len(),
                expected: space.atom_count(),
            });
        }
        let mut sum = 0.0;
        for (index, &value) in atoms.iter().enumerate() {
            if !(value >= 0.0) {
                return Err(JointError::NegativeAtom { index, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(JointError::NotNormalized(sum));
        }
        Ok(JointDistribution { space, atoms })
    }

    pub fn uniform(space: Arc<PropositionSpace>) -> Self {
        let n = space.atom_count();
        JointDistribution {
            space,
            atoms: vec![1.0 / n as f64; n],
        }
    }

    pub fn space(&self) -> &Arc<PropositionSpace> {
        &self.space
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Probability of the event described by `f`.
    pub fn probability(&self, f: &Formula) -> Result<f64, JointError> {
        f.validate(&self.space)?;
        let mut p = 0.0;
        for (i, &a) in self.atoms.iter().enumerate() {
            if f.eval(&self.space, i)? {
                p += a;
            }
        }
        Ok(p.min(1.0))
    }

    /// p(target | given); errors when p(given) = 0.
    pub fn conditional_probability(
        &self,
        target: &Formula,
        given: &Formula,
    ) -> Result<f64, JointError> {
        let pg = self.probability(given)?;
        if pg <= 0.0 {
            return Err(JointError::ZeroConditioningEvent);
        }
        let joint = self.probability(&Formula::and2(target.clone(), given.clone()))?;
        Ok((joint / pg).min(1.0))
    }

    /// Marginal probability of a single proposition.
    pub fn marginal(&self, name: &str) -> Result<f64, JointError> {
        self.probability(&Formula::atom(name))
    }

    /// Jeffrey's Rule: moves each partition cell to its target probability
    /// while preserving the conditional distribution inside each cell.
    pub fn jeffrey_update(&self, partition: &EventPartition) -> Result<Self, JointError> {
        let cell_of = partition.cell_assignment(&self.space)?;
        let mut prior_mass = vec![0.0; partition.cells.len()];
        for (i, &a) in self.atoms.iter().enumerate() {
            prior_mass[cell_of[i]] += a;
        }
        let mut scale = vec![0.0; partition.cells.len()];
        for (cell, (&prior, c)) in prior_mass.iter().zip(&partition.cells).enumerate() {
            if prior > 0.0 {
                scale[cell] = c.target / prior;
            } else if c.target > 0.0 {
                return Err(JointError::ZeroPriorCell {
                    cell,
                    target: c.target,
                });
            }
        }
        let atoms = self
            .atoms
            .iter()
            .enumerate()
            .map(|(i, &a)| a * scale[cell_of[i]])
            .collect();
        Ok(JointDistribution {
            space: Arc::clone(&self.space),
            atoms,
        })
    }

    /// Shannon entropy in nats, with 0·ln 0 = 0.
    pub fn entropy(&self) -> f64 {
        self.atoms
            .iter()
            .filter(|&&a| a > 0.0)
            .map(|&a| -a * a.ln())
            .sum()
    }

    /// KL divergence D(self ‖ reference) in nats.
    pub fn kl_divergence(&self, reference: &JointDistribution) -> Result<f64, JointError> {
        let mut kl = 0.0;
        for (i, (&p, &q)) in self.atoms.iter().zip(&reference.atoms).enumerate() {
            if p > 0.0 {
                if q <= 0.0 {
                    return Err(JointError::AbsoluteContinuityViolation(i));
                }
                kl += p * (p / q).ln();
            }
        }
        Ok(kl.max(0.0))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DistOnDisk {
            props: self.space.names.clone(),
            atoms: self.atoms.clone(),
        })
        .expect("distribution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        let on_disk: DistOnDisk = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let space = PropositionSpace::new(on_disk.props).map_err(|e| e.to_string())?;
        JointDistribution::new(Arc::new(space), on_disk.atoms).map_err(|e| e.to_string())
    }
}

/// One cell of an event partition: a formula and its new target probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionCell {
    pub formula: Formula,
    pub target: f64,
}

/// Mutually exclusive, jointly exhaustive cells with target probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct EventPartition {
    cells: Vec<PartitionCell>,
}

impl EventPartition {
    /// Validates targets (each ≥ 0, summing to 1 within 1e-9) and keeps the
    /// cells. Exclusivity/exhaustiveness is checked against a space at use
    /// time by full atom enumeration.
    pub fn new(cells: Vec<(Formula, f64)>) -> Result<Self, JointError> {
        let mut sum = 0.0;
        for &(_, target) in &cells {
            if !(target >= 0.0) {
                return Err(JointError::NegativeTarget(target));
            }
            sum += target;
        }
        if (sum - 1.0).abs() > PARTITION_SUM_TOL {
            return Err(JointError::TargetsNotNormalized(sum));
        }
        let cells = cells
            .into_iter()
            .map(|(formula, target)| PartitionCell {
                formula,
                target: target / sum,
            })
            .collect();
        Ok(EventPartition { cells })
    }

    /// Builds the two-cell partition {f: value, ¬f: 1 − value}.
    pub fn binary(f: Formula, value: f64) -> Result<Self, JointError> {
        let complement = Formula::not(f.clone());
        EventPartition::new(vec![(f, value), (complement, 1.0 - value)])
    }

    /// Completes a non-exhaustive cell list by appending the complement of
    /// the given cells with the remaining probability mass.
    pub fn extend_nonexhaustive(
        space: &PropositionSpace,
        cells: Vec<(Formula, f64)>,
    ) -> Result<Self, JointError> {
        if cells.is_empty() {
            return Err(JointError::InvalidPartition("no cells given".into()));
        }
        for (f, _) in &cells {
            f.validate(space)?;
        }
        // Exclusivity by atom enumeration.
        for i in 0..space.atom_count() {
            let hits = cells
                .iter()
                .filter(|(f, _)| f.eval(space, i).unwrap_or(false))
                .count();
            if hits > 1 {
                return Err(JointError::InvalidPartition(format!(
                    "cells are not exclusive: atom {i} is covered {hits} times"
                )));
            }
        }
        let mut sum = 0.0;
        for &(_, target) in &cells {
            if !(target >= 0.0) {
                return Err(JointError::NegativeTarget(target));
            }
            sum += target;
        }
        if sum > 1.0 + SUM_TOL {
            return Err(JointError::TargetsNotNormalized(sum));
        }
        let rest = Formula::not(if cells.len() == 1 {
            cells[0].0.clone()
        } else {
            Formula::Or(cells.iter().map(|(f, _)| f.clone()).collect())
        });
        let mut all = cells;
        all.push((rest, (1.0 - sum).max(0.0)));
        EventPartition::new(all)
    }

    pub fn cells(&self) -> impl Iterator<Item = (&Formula, f64)> {
        self.cells.iter().map(|c| (&c.formula, c.target))
    }

    /// Maps every atom to the unique cell containing it, or errors if the
    /// cells are not exclusive and exhaustive over `space`.
    fn cell_assignment(&self, space: &PropositionSpace) -> Result<Vec<usize>, JointError> {
        let mut assignment = Vec::with_capacity(space.atom_count());
        for i in 0..space.atom_count() {
            let mut found = None;
            for (cell, c) in self.cells.iter().enumerate() {
                if c.formula.eval(space, i)? {
                    if found.is_some() {
                        return Err(JointError::InvalidPartition(format!(
                            "atom {i} lies in more than one cell"
                        )));
                    }
                    found = Some(cell);
                }
            }
            match found {
                Some(cell) => assignment.push(cell),
                None => {
                    return Err(JointError::InvalidPartition(format!(
                        "atom {i} lies in no cell"
                    )))
                }
            }
        }
        Ok(assignment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn space2() -> Arc<PropositionSpace> {
        Arc::new(PropositionSpace::new(vec!["A1".into(), "A2".into()]).unwrap())
    }

    /// The negatively correlated prior used throughout the bias analyses:
    /// p(A1) = p(A2) = 1/2, p(A1 & A2) = 1/9.
    pub(crate) fn negcorr_prior() -> JointDistribution {
        JointDistribution::new(
            space2(),
            vec![1.0 / 9.0, 7.0 / 18.0, 7.0 / 18.0, 1.0 / 9.0],
        )
        .unwrap()
    }

    #[test]
    fn probability_of_conjunction_on_negcorr_prior() {
        let d = negcorr_prior();
        let f = Formula::parse("(A1 & A2)").unwrap();
        assert!((d.probability(&f).unwrap() - 1.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn tautology_has_probability_one() {
        let d = negcorr_prior();
        let f = Formula::parse("(A1 | !A1)").unwrap();
        assert!((d.probability(&f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_conjunction_is_a_quarter() {
        let d = JointDistribution::uniform(space2());
        let f = Formula::parse("(A1 & A2)").unwrap();
        assert!((d.probability(&f).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn conditional_probability_on_negcorr_prior() {
        let d = negcorr_prior();
        let p = d
            .conditional_probability(&Formula::atom("A2"), &Formula::atom("A1"))
            .unwrap();
        assert!((p - 2.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_on_itself_is_one() {
        let d = negcorr_prior();
        let f = Formula::atom("A1");
        assert!((d.conditional_probability(&f, &f).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_conditioning_event_errors() {
        let d = negcorr_prior();
        let never = Formula::parse("(A1 & !A1)").unwrap();
        assert!(matches!(
            d.conditional_probability(&Formula::atom("A2"), &never),
            Err(JointError::ZeroConditioningEvent)
        ));
    }

    #[test]
    fn jeffrey_update_scales_within_cells() {
        let d = JointDistribution::uniform(space2());
        let part = EventPartition::binary(Formula::atom("A1"), 0.9).unwrap();
        let updated = d.jeffrey_update(&part).unwrap();
        let conj = Formula::parse("(A1 & A2)").unwrap();
        assert!((updated.probability(&conj).unwrap() - 0.45).abs() < 1e-12);
        assert!((updated.probability(&Formula::atom("A1")).unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn jeffrey_update_with_prior_targets_is_identity() {
        let d = negcorr_prior();
        let part = EventPartition::binary(Formula::atom("A1"), 0.5).unwrap();
        let updated = d.jeffrey_update(&part).unwrap();
        for (a, b) in d.atoms().iter().zip(updated.atoms()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn jeffrey_zero_prior_cell_errors() {
        let d = JointDistribution::new(space2(), vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let part = EventPartition::binary(Formula::atom("A2"), 0.3).unwrap();
        assert!(matches!(
            d.jeffrey_update(&part),
            Err(JointError::ZeroPriorCell { .. })
        ));
    }

    #[test]
    fn extend_nonexhaustive_adds_complement() {
        let space = space2();
        let part =
            EventPartition::extend_nonexhaustive(&space, vec![(Formula::atom("A1"), 0.9)]).unwrap();
        let cells: Vec<_> = part.cells().collect();
        assert_eq!(cells.len(), 2);
        assert!((cells[1].1 - 0.1).abs() < 1e-12);
        assert_eq!(cells[1].0, &Formula::not(Formula::atom("A1")));
    }

    #[test]
    fn extend_nonexhaustive_two_cells() {
        let space = space2();
        let part = EventPartition::extend_nonexhaustive(
            &space,
            vec![
                (Formula::parse("(A1 & A2)").unwrap(), 0.3),
                (Formula::parse("(A1 & !A2)").unwrap(), 0.2),
            ],
        )
        .unwrap();
        let cells: Vec<_> = part.cells().collect();
        assert_eq!(cells.len(), 3);
        assert!((cells[2].1 - 0.5).abs() < 1e-12);
        // The complement cell is exactly ¬A1.
        let d = JointDistribution::uniform(space2());
        let p_rest = d.probability(cells[2].0).unwrap();
        assert!((p_rest - 0.5).abs() < 1e-12);
    }

    #[test]
    fn extend_nonexhaustive_rejects_overlap() {
        let space = space2();
        let result = EventPartition::extend_nonexhaustive(
            &space,
            vec![(Formula::atom("A1"), 0.7), (Formula::atom("A2"), 0.7)],
        );
        assert!(matches!(result, Err(JointError::InvalidPartition(_))));
    }

    #[test]
    fn entropy_of_uniform_is_n_ln2() {
        let d = JointDistribution::uniform(space2());
        assert!((d.entropy() - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn kl_to_self_is_zero_and_point_mass_is_ln4() {
        let d = negcorr_prior();
        assert!(d.kl_divergence(&d).unwrap().abs() < 1e-15);
        let point = JointDistribution::new(space2(), vec![0.0, 0.0, 0.0, 1.0]).unwrap();
        let uniform = JointDistribution::uniform(space2());
        assert!((point.kl_divergence(&uniform).unwrap() - 4.0f64.ln()).abs() < 1e-12);
        assert!(matches!(
            uniform.kl_divergence(&point),
            Err(JointError::AbsoluteContinuityViolation(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let d = negcorr_prior();
        let back = JointDistribution::from_json(&d.to_json()).unwrap();
        assert_eq!(d, back);
    }
}
