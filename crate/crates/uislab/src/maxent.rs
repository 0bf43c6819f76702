//! Maximum-entropy prior fitting and minimum-cross-entropy updating.
//!
//! Both are built from one primitive: the iterative proportional fitting
//! procedure, which cycles Jeffrey projections over the constraints until
//! every constraint holds. Fitting a maximum-entropy prior is the same
//! procedure started from the uniform distribution.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::joint::{
    EventPartition, Formula, JointDistribution, JointError, PropositionSpace,
};

/// Default convergence tolerance on the constraint residual.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Default cap on full projection cycles.
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// A marginal or conditional probability target.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Marginal { target: Formula, value: f64 },
    Conditional { target: Formula, given: Formula, value: f64 },
}

impl Constraint {
    pub fn marginal(target: Formula, value: f64) -> Self {
        Constraint::Marginal { target, value }
    }

    pub fn conditional(target: Formula, given: Formula, value: f64) -> Self {
        Constraint::Conditional { target, given, value }
    }

    pub fn value(&self) -> f64 {
        match self {
            Constraint::Marginal { value, .. } | Constraint::Conditional { value, .. } => *value,
        }
    }

    pub fn validate(&self, space: &PropositionSpace) -> Result<(), FitError> {
        let value = self.value();
        if !(0.0..=1.0).contains(&value) {
            return Err(FitError::ValueOutOfRange(value));
        }
        match self {
            Constraint::Marginal { target, .. } => target.validate(space)?,
            Constraint::Conditional { target, given, .. } => {
                target.validate(space)?;
                given.validate(space)?;
            }
        }
        Ok(())
    }

    /// Deviation |achieved − target| under `dist`. A conditional whose
    /// condition has probability zero contributes 1.
    pub fn deviation(&self, dist: &JointDistribution) -> Result<f64, FitError> {
        match self {
            Constraint::Marginal { target, value } => {
                Ok((dist.probability(target)? - value).abs())
            }
            Constraint::Conditional { target, given, value } => {
                match dist.conditional_probability(target, given) {
                    Ok(p) => Ok((p - value).abs()),
                    Err(JointError::ZeroConditioningEvent) => Ok(1.0),
                    Err(e) => Err(e.into()),
                }
            }
        }
    }
}

/// Convergence bookkeeping for a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub max_residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum FitError {
    #[error(transparent)]
    Joint(#[from] JointError),
    #[error("constraint value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error(
        "did not converge after {} cycles (residual {:.3e}); constraints may be infeasible",
        report.iterations,
        report.max_residual
    )]
    NotConverged { report: FitReport },
}

/// Single Jeffrey projection enforcing one constraint exactly.
///
/// A marginal target becomes the partition {f: v, ¬f: 1 − v}. A conditional
/// target p(t|g) = v becomes the three-cell partition {t∧g, ¬t∧g, ¬g} that
/// keeps p(g) at its current value.
pub fn project(dist: &JointDistribution, c: &Constraint) -> Result<JointDistribution, FitError> {
    let partition = match c {
        Constraint::Marginal { target, value } => {
            EventPartition::binary(target.clone(), *value)?
        }
        Constraint::Conditional { target, given, value } => {
            let pg = dist.probability(given)?;
            if pg <= 0.0 {
                return Err(FitError::Joint(JointError::ZeroConditioningEvent));
            }
            EventPartition::new(vec![
                (Formula::and2(target.clone(), given.clone()), value * pg),
                (
                    Formula::and2(Formula::not(target.clone()), given.clone()),
                    (1.0 - value) * pg,
                ),
                (Formula::not(given.clone()), 1.0 - pg),
            ])?
        }
    };
    Ok(dist.jeffrey_update(&partition)?)
}

/// Max deviation over the constraints.
pub fn residual(dist: &JointDistribution, constraints: &[Constraint]) -> Result<f64, FitError> {
    let mut worst: f64 = 0.0;
    for c in constraints {
        worst = worst.max(c.deviation(dist)?);
    }
    Ok(worst)
}

/// Minimum-cross-entropy update: cycles Jeffrey projections over the
/// constraints until the residual drops below `tol` or `max_iters` full
/// cycles have run.
pub fn mxe_update(
    prior: &JointDistribution,
    constraints: &[Constraint],
    tol: f64,
    max_iters: usize,
) -> Result<(JointDistribution, FitReport), FitError> {
    for c in constraints {
        c.validate(prior.space())?;
    }
    let mut dist = prior.clone();
    let mut max_residual = residual(&dist, constraints)?;
    if max_residual <= tol {
        return Ok((
            dist,
            FitReport {
                iterations: 0,
                max_residual,
                converged: true,
            },
        ));
    }
    for cycle in 1..=max_iters {
        for c in constraints {
            dist = project(&dist, c)?;
        }
        max_residual = residual(&dist, constraints)?;
        if max_residual <= tol {
            return Ok((
                dist,
                FitReport {
                    iterations: cycle,
                    max_residual,
                    converged: true,
                },
            ));
        }
    }
    Err(FitError::NotConverged {
        report: FitReport {
            iterations: max_iters,
            max_residual,
            converged: false,
        },
    })
}

/// Fits the maximum-entropy distribution satisfying the constraints:
/// the minimum-cross-entropy update of the uniform distribution.
pub fn fit_max_entropy_prior(
    space: Arc<PropositionSpace>,
    constraints: &[Constraint],
    tol: f64,
    max_iters: usize,
) -> Result<(JointDistribution, FitReport), FitError> {
    mxe_update(&JointDistribution::uniform(space), constraints, tol, max_iters)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{flat_prior, negcorr_prior, space2};

    fn f(text: &str) -> Formula {
        Formula::parse(text).unwrap()
    }

    #[test]
    fn project_marginal_matches_jeffrey_example() {
        let d = flat_prior();
        let out = project(&d, &Constraint::marginal(f("A1"), 0.9)).unwrap();
        assert!((out.probability(&f("(A1 & A2)")).unwrap() - 0.45).abs() < 1e-12);
    }

    #[test]
    fn project_is_identity_when_already_satisfied() {
        let d = negcorr_prior();
        let out = project(&d, &Constraint::marginal(f("A1"), 0.5)).unwrap();
        for (a, b) in d.atoms().iter().zip(out.atoms()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn project_conditional_scales_inside_the_condition() {
        let d = flat_prior();
        let out = project(&d, &Constraint::conditional(f("A2"), f("A1"), 0.8)).unwrap();
        assert!((out.probability(&f("(A1 & A2)")).unwrap() - 0.4).abs() < 1e-12);
        assert!((out.probability(&f("(A1 & !A2)")).unwrap() - 0.1).abs() < 1e-12);
        assert!((out.probability(&f("(!A1 & A2)")).unwrap() - 0.25).abs() < 1e-12);
        assert!((out.probability(&f("(!A1 & !A2)")).unwrap() - 0.25).abs() < 1e-12);
        assert!(
            (out.conditional_probability(&f("A2"), &f("A1")).unwrap() - 0.8).abs() < 1e-12
        );
    }

    #[test]
    fn mxe_reproduces_the_negcorr_posteriors() {
        let prior = negcorr_prior();
        let conj = f("(A1 & A2)");
        let cases = [
            (0.9, 0.9, 0.801, 1e-3),
            (0.9, 0.1, 0.05543, 1e-4),
            (0.1, 0.1, 0.001, 5e-4),
        ];
        for (a1, a2, expected, tol) in cases {
            let constraints = [
                Constraint::marginal(f("A1"), a1),
                Constraint::marginal(f("A2"), a2),
            ];
            let (post, report) =
                mxe_update(&prior, &constraints, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
            assert!(report.converged);
            assert!((post.probability(&conj).unwrap() - expected).abs() < tol);
        }
    }

    #[test]
    fn infeasible_constraints_fail_to_converge() {
        let prior = flat_prior();
        let constraints = [
            Constraint::marginal(f("A1"), 0.9),
            Constraint::marginal(f("(A1 & A2)"), 0.95),
        ];
        let result = mxe_update(&prior, &constraints, 1e-9, 200);
        assert!(matches!(result, Err(FitError::NotConverged { .. })));
    }

    #[test]
    fn me_fit_recovers_the_negcorr_prior() {
        let constraints = [
            Constraint::marginal(f("A1"), 0.5),
            Constraint::marginal(f("A2"), 0.5),
            Constraint::marginal(f("(A1 & A2)"), 1.0 / 9.0),
        ];
        let (fit, _) =
            fit_max_entropy_prior(space2(), &constraints, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        let expected = negcorr_prior();
        for (a, b) in fit.atoms().iter().zip(expected.atoms()) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn me_fit_leaves_unconstrained_propositions_uniform() {
        let constraints = [Constraint::marginal(f("A1"), 0.5)];
        let (fit, _) =
            fit_max_entropy_prior(space2(), &constraints, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        for &a in fit.atoms() {
            assert!((a - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn me_fit_is_independent_across_marginals() {
        let space = Arc::new(
            PropositionSpace::new(vec!["A1".into(), "A2".into(), "A3".into()]).unwrap(),
        );
        let constraints = [
            Constraint::marginal(f("A1"), 0.5),
            Constraint::marginal(f("A2"), 0.5),
            Constraint::marginal(f("A3"), 0.5),
        ];
        let (fit, _) =
            fit_max_entropy_prior(space, &constraints, DEFAULT_TOL, DEFAULT_MAX_ITERS).unwrap();
        for &a in fit.atoms() {
            assert!((a - 0.125).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_examples() {
        let d = flat_prior();
        let satisfied = [Constraint::marginal(f("A1"), 0.5)];
        assert!(residual(&d, &satisfied).unwrap() < 1e-15);
        let off = [Constraint::marginal(f("A1"), 0.9)];
        assert!((residual(&d, &off).unwrap() - 0.4).abs() < 1e-12);
        let degenerate = [Constraint::conditional(f("A2"), f("(A1 & !A1)"), 0.5)];
        assert!((residual(&d, &degenerate).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_partition_case_matches_jeffrey_exactly_in_one_cycle() {
        let prior = negcorr_prior();
        let constraints = [Constraint::marginal(f("A1"), 0.9)];
        let (post, report) = mxe_update(&prior, &constraints, 1e-9, 10).unwrap();
        assert_eq!(report.iterations, 1);
        let part = EventPartition::binary(f("A1"), 0.9).unwrap();
        let direct = prior.jeffrey_update(&part).unwrap();
        for (a, b) in post.atoms().iter().zip(direct.atoms()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn refitting_converged_output_takes_one_cycle() {
        let prior = negcorr_prior();
        let constraints = [
            Constraint::marginal(f("A1"), 0.9),
            Constraint::marginal(f("A2"), 0.9),
        ];
        let (post, _) = mxe_update(&prior, &constraints, 1e-9, 10_000).unwrap();
        let (_, report) = mxe_update(&post, &constraints, 1e-9, 10).unwrap();
        assert!(report.iterations <= 1);
    }
}
