//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single pass/fail line so a full run doubles as a scoreboard.

use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use uislab::calculi::{prob_from_cf, CertaintyFactor, UisKind};
use uislab::harness::{
    bias_table, builtin_prior, demorgan_audit, expected_sq_error, one_datum_diagnostic,
    rule_or_independence_check, run_sweep, AuditEngine, CorrelationSign, OneDatumBranch,
    SweepConfig, TableMode,
};
use uislab::joint::{EventPartition, Formula, JointDistribution, PropositionSpace};
use uislab::maxent::{mxe_update, residual, Constraint};
use uislab::rulemodel::{self, fit_prior};

fn verdict(criterion: &str, passed: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} — {detail}",
        if passed { "pass" } else { "FAIL" }
    );
    assert!(passed, "criterion {criterion} failed: {detail}");
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

const SIGN_PAIRS: [(f64, f64); 3] = [(0.8, 0.8), (0.8, -0.8), (-0.8, -0.8)];

#[test]
fn criterion_01_conjunction_bias_negative_correlation() {
    let prior = builtin_prior(CorrelationSign::Negative);
    let rows = bias_table(&prior, &SIGN_PAIRS, TableMode::And).unwrap();
    let expected_mxe = [0.776, -0.501, -0.991];
    let expected_min = [0.8, -0.8, -0.8];
    let expected_post = [(0.801, 1e-3), (0.05543, 1e-4), (0.001, 5e-4)];
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        ok &= (row.cf_mxe - expected_mxe[i]).abs() <= 2e-3;
        ok &= row.cf_heuristic == expected_min[i];
        let (post, tol) = expected_post[i];
        ok &= (row.posterior_mxe - post).abs() <= tol;
    }
    verdict(
        "1",
        ok,
        "negative-correlation conjunction table: exact CFs (+0.776, -0.501, -0.991), \
         min rule (+0.8, -0.8, -0.8), posteriors (0.801, 0.05543, 0.001)",
    );
}

#[test]
fn criterion_02_conjunction_bias_positive_correlation() {
    let prior = builtin_prior(CorrelationSign::Positive);
    let rows = bias_table(&prior, &SIGN_PAIRS, TableMode::And).unwrap();
    let expected_mxe = [0.746, -0.746, -0.885];
    let ok = rows
        .iter()
        .zip(expected_mxe)
        .all(|(row, e)| (row.cf_mxe - e).abs() <= 2e-3);
    verdict(
        "2",
        ok,
        "positive-correlation conjunction table: exact CFs (+0.746, -0.746, -0.885)",
    );
}

#[test]
fn criterion_03_disjunction_bias_flat_prior() {
    let prior = builtin_prior(CorrelationSign::Zero);
    let pairs = [(0.8, 0.8), (0.8, -0.8), (0.4, 0.4), (-0.8, -0.8)];
    let rows = bias_table(&prior, &pairs, TableMode::Or).unwrap();
    let expected_max = [0.8, 0.8, 0.4, -0.8];
    let expected_rule_or = [0.96, 0.0, 0.64, -0.96];
    let expected_mxe = [0.9600, 0.6400, 0.6400, -0.7467];
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        ok &= row.cf_heuristic == expected_max[i];
        ok &= (row.cf_rule_or.unwrap() - expected_rule_or[i]).abs() < 1e-12;
        ok &= (row.cf_mxe - expected_mxe[i]).abs() <= 2e-3;
    }
    verdict(
        "3",
        ok,
        "flat-prior disjunction table: max rule and rule-or exact, exact CFs \
         (+0.9600, +0.6400, +0.6400, -0.7467)",
    );
}

#[test]
fn criterion_04_disjunction_bias_across_correlations() {
    let expected_mxe = [
        (CorrelationSign::Negative, -0.776),
        (CorrelationSign::Zero, -0.747),
        (CorrelationSign::Positive, -0.746),
    ];
    let mut ok = true;
    for (sign, e) in expected_mxe {
        let prior = builtin_prior(sign);
        let rows = bias_table(&prior, &[(-0.8, -0.8)], TableMode::Or).unwrap();
        let rule_or = rows[0].cf_rule_or.unwrap();
        ok &= (rule_or + 0.96).abs() < 1e-12;
        ok &= (rows[0].cf_mxe - e).abs() <= 2e-3;
        ok &= rule_or.abs() > rows[0].cf_mxe.abs();
    }
    verdict(
        "4",
        ok,
        "double-disconfirmation disjunction: rule-or -0.96 exact, exact CFs \
         (-0.776, -0.747, -0.746), |rule-or| exceeds each exact value",
    );
}

#[test]
fn criterion_05_expected_squared_error_closed_form() {
    let mut ok = (expected_sq_error(0.5, 0.5).unwrap() - 1.0 / 12.0).abs() <= 1e-12;
    ok &= (expected_sq_error(0.6, 0.2).unwrap() - 0.92 / 6.0).abs() <= 1e-12;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let p_m1: f64 = rng.gen();
        let p0: f64 = rng.gen();
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let c: f64 = rng.gen_range(-1.0..=1.0);
            let p = prob_from_cf(CertaintyFactor::clamped(c), p0);
            sum += (p - p_m1) * (p - p_m1);
        }
        let mc = sum / n as f64;
        worst = worst.max((mc - expected_sq_error(p_m1, p0).unwrap()).abs());
    }
    ok &= worst <= 1e-3;
    verdict(
        "5",
        ok,
        &format!(
            "expected squared error matches a 10^6-sample Monte-Carlo oracle at 20 random \
             anchor pairs (worst gap {worst:.2e}) and the closed-form spot values"
        ),
    );
}

#[test]
fn criterion_06_rule_or_independence_identity_and_infeasibility() {
    let check = rule_or_independence_check(100_000, 7);
    let ok = check.passed()
        && check.max_identity_gap <= 1e-12
        && check.infeasibility_counterexamples == 0;
    verdict(
        "6",
        ok,
        &format!(
            "rising-side independence identity holds over 10^5 tuples (worst gap \
             {:.2e}); falling-side identity has no feasible counterexample",
            check.max_identity_gap
        ),
    );
}

fn cf_grid() -> Vec<f64> {
    (-4..=4).map(|i| i as f64 * 0.2).collect()
}

#[test]
fn criterion_07_one_datum_equivalence() {
    let mut ok = true;
    let mut worst = 0.0f64;
    let mut branches_seen = [false, false];
    for prior in [
        builtin_prior(CorrelationSign::Negative),
        builtin_prior(CorrelationSign::Zero),
    ] {
        for mode in [TableMode::And, TableMode::Or] {
            for &a in &cf_grid() {
                for &b in &cf_grid() {
                    let report = one_datum_diagnostic(&prior, (a, b), mode).unwrap();
                    worst = worst.max(report.gap);
                    ok &= report.gap <= 1e-9;
                    match report.branch {
                        OneDatumBranch::IgnoresWeakerDatum => branches_seen[0] = true,
                        OneDatumBranch::ScalesCompoundEvent => branches_seen[1] = true,
                    }
                }
            }
        }
    }
    ok &= branches_seen[0] && branches_seen[1];
    verdict(
        "7",
        ok,
        &format!(
            "min/max rules match their one-datum exact updates on a 9x9 CF grid over the \
             negatively-correlated and flat priors, both branches exercised \
             (worst gap {worst:.2e})"
        ),
    );
}

#[test]
fn criterion_08_demorgan_audit() {
    let prior = builtin_prior(CorrelationSign::Zero);
    let grid = cf_grid();
    let pairs: Vec<(f64, f64)> = grid
        .iter()
        .flat_map(|&a| grid.iter().map(move |&b| (a, b)))
        .collect();
    let heuristic = demorgan_audit(&prior, &pairs, AuditEngine::RuleOr).unwrap();
    let exact = demorgan_audit(&prior, &pairs, AuditEngine::Mxe).unwrap();
    let ok = heuristic.max_discrepancy > 0.05 && exact.max_discrepancy <= 1e-9;
    verdict(
        "8",
        ok,
        &format!(
            "rule-or breaks DeMorgan by {:.4} at {:?} on the flat prior; the exact engine \
             stays within {:.1e}",
            heuristic.max_discrepancy, heuristic.worst_pair, exact.max_discrepancy
        ),
    );
}

#[test]
fn criterion_09_solver_properties() {
    // (a) Every shipped fixture fits to residual <= 1e-9.
    let mut ok = true;
    let mut fixture_count = 0;
    for entry in std::fs::read_dir(fixtures_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("rules") {
            continue;
        }
        fixture_count += 1;
        let text = std::fs::read_to_string(&path).unwrap();
        let rs = rulemodel::parse(&text).unwrap();
        match fit_prior(&rs, 1e-9, 10_000) {
            Ok(compiled) => {
                ok &= compiled.fit_report.converged && compiled.fit_report.max_residual <= 1e-9
            }
            Err(e) => {
                println!("  fixture {} failed to fit: {e}", path.display());
                ok = false;
            }
        }
    }
    ok &= fixture_count == 26;

    // (b) KL-minimality oracle: the update is closer to the prior than any
    // other feasible distribution, sampled by projecting random starting
    // points onto the constraint set.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for names in [vec!["A", "B"], vec!["A", "B", "C"]] {
        let space = Arc::new(
            PropositionSpace::new(names.iter().map(|s| s.to_string()).collect()).unwrap(),
        );
        let prior = random_distribution(&space, &mut rng);
        let constraints = [
            Constraint::marginal(Formula::atom("A"), 0.7),
            Constraint::conditional(Formula::atom("B"), Formula::atom("A"), 0.4),
        ];
        let (updated, _) = mxe_update(&prior, &constraints, 1e-11, 10_000).unwrap();
        let kl_star = updated.kl_divergence(&prior).unwrap();
        for _ in 0..20 {
            let start = random_distribution(&space, &mut rng);
            let (feasible, _) = mxe_update(&start, &constraints, 1e-11, 10_000).unwrap();
            assert!(residual(&feasible, &constraints).unwrap() <= 1e-9);
            ok &= kl_star <= feasible.kl_divergence(&prior).unwrap() + 1e-6;
        }
    }

    // (c) A single constraint needs no iteration: the update is exactly one
    // Jeffrey projection.
    let space = Arc::new(PropositionSpace::new(vec!["A".into(), "B".into()]).unwrap());
    let prior = random_distribution(&space, &mut rng);
    let single = [Constraint::marginal(Formula::parse("(A | B)").unwrap(), 0.9)];
    let (via_mxe, _) = mxe_update(&prior, &single, 1e-11, 10_000).unwrap();
    let partition = EventPartition::binary(Formula::parse("(A | B)").unwrap(), 0.9).unwrap();
    let via_jeffrey = prior.jeffrey_update(&partition).unwrap();
    ok &= via_mxe.atoms() == via_jeffrey.atoms();

    // (d) The conditional-independence fixture's fitted prior factorizes.
    let text = std::fs::read_to_string(fixtures_dir().join("cnd-ind-2.rules")).unwrap();
    let rs = rulemodel::parse(&text).unwrap();
    let compiled = fit_prior(&rs, 1e-11, 10_000).unwrap();
    let c = Formula::atom("C");
    let both = compiled
        .prior
        .conditional_probability(&Formula::parse("(B1 & B2)").unwrap(), &c)
        .unwrap();
    let b1 = compiled
        .prior
        .conditional_probability(&Formula::atom("B1"), &c)
        .unwrap();
    let b2 = compiled
        .prior
        .conditional_probability(&Formula::atom("B2"), &c)
        .unwrap();
    ok &= (both - b1 * b2).abs() <= 1e-6;

    verdict(
        "9",
        ok,
        "all 26 fixtures fit to residual <= 1e-9; the update is KL-minimal among sampled \
         feasible distributions; a single constraint reproduces the Jeffrey update exactly; \
         the cnd-ind-2 prior factorizes given the consequent",
    );
}

fn random_distribution(space: &Arc<PropositionSpace>, rng: &mut ChaCha8Rng) -> JointDistribution {
    let mut atoms: Vec<f64> = (0..space.atom_count())
        .map(|_| rng.gen_range(0.05..1.0))
        .collect();
    let total: f64 = atoms.iter().sum();
    for a in &mut atoms {
        *a /= total;
    }
    JointDistribution::new(Arc::clone(space), atoms).unwrap()
}

#[test]
fn criterion_10_sweep_determinism() {
    let text = std::fs::read_to_string(fixtures_dir().join("bsh2-u_l.rules")).unwrap();
    let rs = rulemodel::parse(&text).unwrap();
    let config = SweepConfig::new(99);
    let uis = [UisKind::Myc, UisKind::Tsm, UisKind::Ci];
    let first = run_sweep(&rs, &uis, &config).unwrap();
    let second = run_sweep(&rs, &uis, &config).unwrap();
    let ok = first.len() == second.len()
        && first
            .iter()
            .zip(&second)
            .all(|(a, b)| a.to_csv() == b.to_csv());
    verdict(
        "10",
        ok,
        "two seeded sweep runs (parallel trial execution) produce byte-identical CSV",
    );
}

fn fixture_mean_zeta(file: &str, uis: UisKind, config: &SweepConfig) -> f64 {
    let text = std::fs::read_to_string(fixtures_dir().join(file)).unwrap();
    let rs = rulemodel::parse(&text).unwrap();
    let reports = run_sweep(&rs, &[uis], config).unwrap();
    assert_eq!(reports[0].failed_trials, 0, "{file} had failed trials");
    reports[0].mean_zeta
}

#[test]
fn criterion_11_performance_orderings() {
    let config = SweepConfig::new(17);

    // (a) Across the three-antecedent conjunction fixtures, with evidence
    // levels on both sides of the leaf priors, ignoring disconfirmation
    // (MYC) outscores reacting to it with heuristic mirroring (TSM).
    let bsh3 = [
        "bsh3-upr.rules",
        "bsh3-upr-pos.rules",
        "bsh3-upr-neg.rules",
        "bsh3-u_l.rules",
        "bsh3-u_l-pos.rules",
        "bsh3-u_l-neg.rules",
    ];
    let mean = |uis| {
        bsh3.iter()
            .map(|f| fixture_mean_zeta(f, uis, &config))
            .sum::<f64>()
            / bsh3.len() as f64
    };
    let myc = mean(UisKind::Myc);
    let tsm = mean(UisKind::Tsm);
    let ok_a = myc > tsm;

    // (b) One representative per family; the worst-case mean scores order
    // CI above MYC above TSM.
    let representatives = [
        "dpth-2.rules",
        "bsh2-upr.rules",
        "bsh3-u_l.rules",
        "1cnc-2rls-neg.rules",
        "2cnc-2rls-neg.rules",
        "1cnc-2lyrs-neg.rules",
        "cnd-ind-2.rules",
        "2cnc-min-shr-ruls-neg.rules",
    ];
    let worst = |uis| {
        representatives
            .iter()
            .map(|f| fixture_mean_zeta(f, uis, &config))
            .fold(f64::INFINITY, f64::min)
    };
    let worst_myc = worst(UisKind::Myc);
    let worst_tsm = worst(UisKind::Tsm);
    let worst_ci = worst(UisKind::Ci);
    let ok_b = worst_ci > worst_myc && worst_myc > worst_tsm;

    verdict(
        "11",
        ok_a && ok_b,
        &format!(
            "(a) mixed-sign conjunction fixtures: mean zeta MYC {myc:.3} > TSM {tsm:.3}; \
             (b) worst case across family representatives: CI {worst_ci:.3} > MYC \
             {worst_myc:.3} > TSM {worst_tsm:.3}"
        ),
    );
}
