//! A laboratory for comparing heuristic uncertain inference systems against
//! exact probabilistic updating.
//!
//! The exact side represents belief as a joint distribution over boolean
//! propositions ([`joint`]), fits maximum-entropy priors and runs
//! minimum-cross-entropy updates by iterative proportional fitting
//! ([`maxent`]). The heuristic side propagates certainty factors through
//! rule trees under three calculi ([`calculi`]). Rule sets are described in
//! a small text format and compiled into fitting constraints
//! ([`rulemodel`]), and the [`harness`] runs the side-by-side experiments:
//! evidence sweeps scored with the ζ metric, bias tables, and algebraic
//! diagnostics.
//!
//! ```
//! use uislab::joint::Formula;
//! use uislab::maxent::{self, Constraint};
//! use uislab::rulemodel;
//!
//! let rules = "\
//! prop A1
//! prop A2
//! prior A1 = 0.5
//! prior A2 = 0.5
//! constrain p((A1 & A2)) = 0.1111111111111111
//! ";
//! let rs = rulemodel::parse(rules)?;
//! let compiled = rulemodel::fit_prior(&rs, 1e-9, 10_000)?;
//!
//! // New evidence arrives on both propositions; the update finds the
//! // closest feasible distribution to the fitted prior.
//! let evidence = [
//!     Constraint::marginal(Formula::atom("A1"), 0.9),
//!     Constraint::marginal(Formula::atom("A2"), 0.9),
//! ];
//! let (posterior, _) = maxent::mxe_update(&compiled.prior, &evidence, 1e-9, 10_000)?;
//! let p = posterior.probability(&Formula::parse("(A1 & A2)")?)?;
//! assert!((p - 0.801).abs() < 1e-3);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod calculi;
pub mod harness;
pub mod joint;
pub mod maxent;
pub mod rulemodel;


// The guide's code blocks compile and run as doctests so the book cannot
// drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/joint-distributions.md")]
    mod joint_distributions {}
    #[doc = include_str!("../../../book/src/maximum-entropy.md")]
    mod maximum_entropy {}
    #[doc = include_str!("../../../book/src/certainty-factors.md")]
    mod certainty_factors {}
    #[doc = include_str!("../../../book/src/rule-files.md")]
    mod rule_files {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
