//! Command-line front end: fit priors from rule files, run exact updates,
//! evaluate the heuristic calculi, sweep evidence grids, and print the
//! built-in comparison tables and diagnostics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use uislab::calculi::{self, UisKind};
use uislab::harness::{
    self, AuditEngine, CorrelationSign, SweepConfig, TableMode,
};
use uislab::joint::{Formula, JointDistribution};
use uislab::maxent::{self, Constraint, FitError};
use uislab::rulemodel::{self, CompileError, FamilyParams, RuleSet, FAMILY_NAMES};

/// Exit 1: bad usage, unparsable input, I/O failure.
const EXIT_USAGE: u8 = 1;
/// Exit 2: the numerics did not converge (infeasible or stiff constraints).
const EXIT_NO_CONVERGENCE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "uislab",
    about = "Compare heuristic uncertain inference calculi against exact updating",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the maximum-entropy prior for a rule file.
    Fit {
        /// Rule file path.
        #[arg(long)]
        rules: PathBuf,
        #[command(flatten)]
        numeric: NumericOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Update a stored distribution with new evidence and query it.
    Update {
        /// Distribution JSON path (as written by `fit`).
        #[arg(long)]
        prior: PathBuf,
        /// Evidence as NAME=prob pairs, comma separated.
        #[arg(long)]
        evidence: String,
        /// Formulas to report posteriors for (repeatable).
        #[arg(long = "query")]
        queries: Vec<String>,
        #[command(flatten)]
        numeric: NumericOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Run one calculus (or several) over a rule file for one evidence set.
    Eval {
        #[arg(long)]
        rules: PathBuf,
        /// Calculi to run: myc, tsm, ci (comma separated).
        #[arg(long, default_value = "myc,tsm,ci")]
        uis: String,
        #[arg(long)]
        evidence: String,
        #[command(flatten)]
        numeric: NumericOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Sweep the evidence grid over a rule file and score each calculus.
    Sweep {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long, default_value = "myc,tsm,ci")]
        uis: String,
        /// Master seed for the jittered evidence levels.
        #[arg(long)]
        seed: u64,
        /// Evidence levels each leaf cycles through.
        #[arg(long, default_value = "0.05,0.35,0.65,0.95")]
        levels: String,
        /// Half-width of the uniform jitter around each level.
        #[arg(long, default_value_t = 0.01)]
        jitter: f64,
        #[command(flatten)]
        numeric: NumericOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Print a built-in comparison table (3-1, 3-2, 3-3 or 3-4).
    Tables {
        /// Table id.
        id: String,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Run an algebraic diagnostic.
    Diagnose {
        #[command(subcommand)]
        check: DiagnoseCheck,
    },
    /// Write a built-in experiment rule set (or all of them).
    Generate {
        /// Family name, or `all`.
        #[arg(long)]
        family: String,
        /// Directory for `--family all` output.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Subcommand)]
enum DiagnoseCheck {
    /// Compare (A1 or A2) computed directly against ¬(¬A1 & ¬A2).
    Demorgan {
        /// Prior correlation: negative, zero or positive.
        #[arg(long, default_value = "zero")]
        correlation: Correlation,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Check the one-datum reading of the min/max combination rules.
    OneDatum {
        #[arg(long, default_value = "negative")]
        correlation: Correlation,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Check the independence identity behind parallel or-combination.
    Independence {
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Correlation {
    Negative,
    Zero,
    Positive,
}

impl From<Correlation> for CorrelationSign {
    fn from(c: Correlation) -> Self {
        match c {
            Correlation::Negative => CorrelationSign::Negative,
            Correlation::Zero => CorrelationSign::Zero,
            Correlation::Positive => CorrelationSign::Positive,
        }
    }
}

#[derive(Args)]
struct NumericOpts {
    /// Convergence tolerance on the constraint residual.
    #[arg(long, default_value_t = maxent::DEFAULT_TOL)]
    tol: f64,
    /// Cap on full projection cycles.
    #[arg(long = "max-iters", default_value_t = maxent::DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Args)]
struct OutputOpts {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write machine output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

struct CliError {
    code: u8,
    message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn no_convergence(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NO_CONVERGENCE,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::usage(format!("i/o error: {e}"))
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match &e {
            FitError::NotConverged { .. } => CliError::no_convergence(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<CompileError> for CliError {
    fn from(e: CompileError) -> Self {
        match &e {
            CompileError::Fit(FitError::NotConverged { .. })
            | CompileError::OuterLoopDiverged(_) => CliError::no_convergence(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<harness::HarnessError> for CliError {
    fn from(e: harness::HarnessError) -> Self {
        match &e {
            harness::HarnessError::Fit(FitError::NotConverged { .. })
            | harness::HarnessError::Compile(CompileError::OuterLoopDiverged(_))
            | harness::HarnessError::Compile(CompileError::Fit(FitError::NotConverged {
                ..
            })) => CliError::no_convergence(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Fit {
            rules,
            numeric,
            output,
        } => cmd_fit(&rules, &numeric, &output),
        Command::Update {
            prior,
            evidence,
            queries,
            numeric,
            output,
        } => cmd_update(&prior, &evidence, &queries, &numeric, &output),
        Command::Eval {
            rules,
            uis,
            evidence,
            numeric,
            output,
        } => cmd_eval(&rules, &uis, &evidence, &numeric, &output),
        Command::Sweep {
            rules,
            uis,
            seed,
            levels,
            jitter,
            numeric,
            output,
        } => cmd_sweep(&rules, &uis, seed, &levels, jitter, &numeric, &output),
        Command::Tables { id, output } => cmd_tables(&id, &output),
        Command::Diagnose { check } => cmd_diagnose(check),
        Command::Generate {
            family,
            dir,
            output,
        } => cmd_generate(&family, dir.as_deref(), &output),
    }
}

fn load_rules(path: &std::path::Path) -> Result<RuleSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    rulemodel::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn parse_evidence(spec: &str) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, value) = part
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("evidence `{part}` is not NAME=prob")))?;
        let p: f64 = value
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("evidence `{part}` has a bad probability")))?;
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::usage(format!("evidence `{part}` outside [0, 1]")));
        }
        out.insert(name.trim().to_string(), p);
    }
    if out.is_empty() {
        return Err(CliError::usage("evidence spec is empty"));
    }
    Ok(out)
}

fn parse_uis_list(spec: &str) -> Result<Vec<UisKind>, CliError> {
    spec.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<UisKind>().map_err(CliError::usage))
        .collect()
}

fn emit(output: &OutputOpts, content: &str) -> Result<(), CliError> {
    match &output.out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn cmd_fit(
    rules: &std::path::Path,
    numeric: &NumericOpts,
    output: &OutputOpts,
) -> Result<(), CliError> {
    let rs = load_rules(rules)?;
    let compiled = rulemodel::fit_prior(&rs, numeric.tol, numeric.max_iters)?;
    eprintln!(
        "fit converged: {} cycles, residual {:.3e}, {} outer rounds",
        compiled.fit_report.iterations,
        compiled.fit_report.max_residual,
        compiled.outer_iterations
    );
    emit(output, &(compiled.prior.to_json() + "\n"))
}

fn cmd_update(
    prior_path: &std::path::Path,
    evidence: &str,
    queries: &[String],
    numeric: &NumericOpts,
    output: &OutputOpts,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(prior_path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", prior_path.display())))?;
    let prior = JointDistribution::from_json(&text)
        .map_err(|e| CliError::usage(format!("{}: {e}", prior_path.display())))?;
    let evidence = parse_evidence(evidence)?;
    let constraints: Vec<Constraint> = evidence
        .iter()
        .map(|(name, &p)| Constraint::marginal(Formula::atom(name), p))
        .collect();
    let (posterior, report) =
        maxent::mxe_update(&prior, &constraints, numeric.tol, numeric.max_iters)?;
    eprintln!(
        "update converged: {} cycles, residual {:.3e}",
        report.iterations, report.max_residual
    );
    if queries.is_empty() {
        return emit(output, &(posterior.to_json() + "\n"));
    }
    let mut rows: Vec<(String, f64)> = Vec::new();
    for q in queries {
        let f = Formula::parse(q).map_err(|e| CliError::usage(format!("query `{q}`: {e}")))?;
        let p = posterior
            .probability(&f)
            .map_err(|e| CliError::usage(format!("query `{q}`: {e}")))?;
        rows.push((q.clone(), p));
    }
    let mut out = String::new();
    match output.format {
        Format::Json => {
            let map: BTreeMap<&str, f64> =
                rows.iter().map(|(q, p)| (q.as_str(), *p)).collect();
            out = serde_json::to_string_pretty(&map).expect("map serializes") + "\n";
        }
        Format::Csv => {
            out.push_str("query,posterior\n");
            for (q, p) in &rows {
                let _ = writeln!(out, "{q},{p}");
            }
        }
        Format::Text => {
            for (q, p) in &rows {
                let _ = writeln!(out, "p({q}) = {p:.6}");
            }
        }
    }
    emit(output, &out)
}

fn cmd_eval(
    rules: &std::path::Path,
    uis: &str,
    evidence: &str,
    numeric: &NumericOpts,
    output: &OutputOpts,
) -> Result<(), CliError> {
    let rs = load_rules(rules)?;
    let uis_list = parse_uis_list(uis)?;
    let evidence = parse_evidence(evidence)?;
    let compiled = rulemodel::fit_prior(&rs, numeric.tol, numeric.max_iters)?;
    let mut results: BTreeMap<&str, BTreeMap<String, f64>> = BTreeMap::new();
    for &kind in &uis_list {
        let posteriors = calculi::evaluate(kind, &rs, &compiled.prior, &evidence)
            .map_err(|e| CliError::usage(e.to_string()))?;
        results.insert(kind.name(), posteriors);
    }
    let out = match output.format {
        Format::Json => serde_json::to_string_pretty(&results).expect("serializes") + "\n",
        Format::Csv => {
            let mut s = String::from("uis,consequent,posterior\n");
            for (name, posteriors) in &results {
                for (c, p) in posteriors {
                    let _ = writeln!(s, "{name},{c},{p}");
                }
            }
            s
        }
        Format::Text => {
            let mut s = String::new();
            for (name, posteriors) in &results {
                for (c, p) in posteriors {
                    let _ = writeln!(s, "{name}: p({c}) = {p:.6}");
                }
            }
            s
        }
    };
    emit(output, &out)
}

fn cmd_sweep(
    rules: &std::path::Path,
    uis: &str,
    seed: u64,
    levels: &str,
    jitter: f64,
    numeric: &NumericOpts,
    output: &OutputOpts,
) -> Result<(), CliError> {
    let rs = load_rules(rules)?;
    let uis_list = parse_uis_list(uis)?;
    let levels: Vec<f64> = levels
        .split(',')
        .map(|l| {
            l.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("bad level `{l}`")))
        })
        .collect::<Result<_, _>>()?;
    if levels.is_empty() || levels.iter().any(|l| !(0.0..=1.0).contains(l)) {
        return Err(CliError::usage("levels must be probabilities"));
    }
    if !(0.0..=0.5).contains(&jitter) {
        return Err(CliError::usage("jitter must lie in [0, 0.5]"));
    }
    let config = SweepConfig {
        seed,
        levels,
        jitter,
        tol: numeric.tol,
        max_iters: numeric.max_iters,
    };
    let reports = harness::run_sweep(&rs, &uis_list, &config)?;
    let mut out = String::new();
    match output.format {
        Format::Json => {
            out = serde_json::to_string_pretty(&reports).expect("serializes") + "\n";
        }
        Format::Csv => {
            for report in &reports {
                let _ = writeln!(out, "# case={} uis={}", report.case_name, report.uis.name());
                out.push_str(&report.to_csv());
            }
        }
        Format::Text => {
            for report in &reports {
                let _ = writeln!(
                    out,
                    "{} / {}: {} trials ({} failed), mean zeta {:.4}",
                    report.case_name,
                    report.uis.name(),
                    report.trial_count,
                    report.failed_trials,
                    report.mean_zeta
                );
                if let Some(r) = &report.regression {
                    let _ = writeln!(
                        out,
                        "  shift regression: slope {:.4}, intercept {:.4}, r^2 {:.4}",
                        r.slope, r.intercept, r.r_squared
                    );
                }
            }
        }
    }
    emit(output, &out)
}

fn cmd_tables(id: &str, output: &OutputOpts) -> Result<(), CliError> {
    let doc = harness::named_table(id)?;
    let out = match output.format {
        Format::Text => doc.to_text(),
        Format::Csv => doc.to_csv(),
        Format::Json => serde_json::to_string_pretty(&doc).expect("serializes") + "\n",
    };
    emit(output, &out)
}

fn cf_grid() -> Vec<(f64, f64)> {
    let mut pairs = Vec::new();
    for i in -4..=4i32 {
        for j in -4..=4i32 {
            pairs.push((f64::from(i) * 0.2, f64::from(j) * 0.2));
        }
    }
    pairs
}

fn cmd_diagnose(check: DiagnoseCheck) -> Result<(), CliError> {
    match check {
        DiagnoseCheck::Demorgan {
            correlation,
            output,
        } => {
            let prior = harness::builtin_prior(correlation.into());
            let pairs = cf_grid();
            let heuristic = harness::demorgan_audit(&prior, &pairs, AuditEngine::RuleOr)?;
            let exact = harness::demorgan_audit(&prior, &pairs, AuditEngine::Mxe)?;
            let out = match output.format {
                Format::Json => {
                    serde_json::to_string_pretty(&[&heuristic, &exact]).expect("serializes")
                        + "\n"
                }
                _ => format!(
                    "rule-or: max discrepancy {:.6} at cfs ({:+.1}, {:+.1})\n\
                     exact:   max discrepancy {:.2e}\n",
                    heuristic.max_discrepancy,
                    heuristic.worst_pair.0,
                    heuristic.worst_pair.1,
                    exact.max_discrepancy
                ),
            };
            emit(&output, &out)
        }
        DiagnoseCheck::OneDatum {
            correlation,
            output,
        } => {
            let prior = harness::builtin_prior(correlation.into());
            let mut reports = Vec::new();
            let mut max_gap: f64 = 0.0;
            for pair in cf_grid() {
                for mode in [TableMode::And, TableMode::Or] {
                    let r = harness::one_datum_diagnostic(&prior, pair, mode)?;
                    max_gap = max_gap.max(r.gap);
                    reports.push(r);
                }
            }
            let out = match output.format {
                Format::Json => serde_json::to_string_pretty(&reports).expect("serializes") + "\n",
                _ => format!(
                    "{} checks, max gap {:.2e}: {}\n",
                    reports.len(),
                    max_gap,
                    if max_gap < 1e-9 { "pass" } else { "FAIL" }
                ),
            };
            emit(&output, &out)
        }
        DiagnoseCheck::Independence {
            samples,
            seed,
            output,
        } => {
            let check = harness::rule_or_independence_check(samples, seed);
            let out = match output.format {
                Format::Json => serde_json::to_string_pretty(&check).expect("serializes") + "\n",
                _ => format!(
                    "{} samples: identity gap {:.2e}, infeasibility counterexamples {}: {}\n",
                    check.samples,
                    check.max_identity_gap,
                    check.infeasibility_counterexamples,
                    if check.passed() { "pass" } else { "FAIL" }
                ),
            };
            emit(&output, &out)
        }
    }
}

/// File-system-safe fixture name for a family.
fn family_file_name(family: &str) -> String {
    format!("{}.rules", family.replace('&', "_"))
}

fn cmd_generate(
    family: &str,
    dir: Option<&std::path::Path>,
    output: &OutputOpts,
) -> Result<(), CliError> {
    let params = FamilyParams::default();
    if family == "all" {
        let dir = dir.ok_or_else(|| CliError::usage("--family all requires --dir"))?;
        std::fs::create_dir_all(dir)?;
        for name in FAMILY_NAMES {
            let rs = rulemodel::generate_family(name, &params)
                .map_err(|e| CliError::usage(e.to_string()))?;
            let path = dir.join(family_file_name(name));
            std::fs::write(&path, header_comment(name) + &rs.serialize())?;
            eprintln!("wrote {}", path.display());
        }
        return Ok(());
    }
    let rs = rulemodel::generate_family(family, &params)
        .map_err(|e| CliError::usage(e.to_string()))?;
    emit(output, &(header_comment(family) + &rs.serialize()))
}

fn header_comment(family: &str) -> String {
    format!("# {family}: generated experiment case (default parameters)\n")
}
