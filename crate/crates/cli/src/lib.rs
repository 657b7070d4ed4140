//! Command implementations behind the `cfgtest` binary.
//!
//! Each `cmd_*` function returns an [`Output`] instead of printing, so the
//! commands can be driven from tests. JSON goes to stdout (or `--report`),
//! human-readable summaries to stderr.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use cfgtest::demo::{default_config, demo_harness_with, demo_registry};
use cfgtest::io::{load_registry, parse_properties};
use cfgtest::quality::{evaluate_quality, generate_corpus, write_corpus, QualityError};
use cfgtest::report::{
    analyze, to_json, CoverageFile, DiffReport, EvalMetadata, EvalReport, ReportError, SelectionReport,
};
use cfgtest::selection::select_tests;
use cfgtest::{
    compute_diff, ConcretizationPolicy, ConfigStore, Harness, HarnessError, ModelError, ParamRegistry, RunOptions,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURES: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_HARNESS: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "cfgtest", version, about = "Test configuration values by running the code that uses them")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the whole suite concretized with a configuration.
    Run(RunArgs),
    /// Compute configuration coverage and save the coverage map.
    Coverage(CoverageArgs),
    /// Select the tests affected by a configuration diff.
    Select(SelectArgs),
    /// Score the suite on a generated misconfiguration corpus.
    Eval(EvalArgs),
    /// Print the diff between two configurations.
    Diff(DiffArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Registry manifest; defaults to the bundled demo registry.
    #[arg(long)]
    pub registry: Option<PathBuf>,
    /// all | get-only | listed=<p1,p2>
    #[arg(long, default_value = "get-only")]
    pub policy: String,
    /// Per-test timeout.
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
    /// Run tests on a thread pool.
    #[arg(long)]
    pub parallel: bool,
}

impl Default for Common {
    fn default() -> Self {
        Self { registry: None, policy: "get-only".into(), timeout_ms: 30_000, parallel: false }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
    /// Configuration to deploy; defaults to the bundled demo configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Where to save the coverage map for later `select` runs.
    #[arg(long)]
    pub coverage: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub old: PathBuf,
    #[arg(long)]
    pub new: PathBuf,
    /// Coverage map written by `coverage`.
    #[arg(long)]
    pub coverage: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    /// Known-good configuration; defaults to the bundled demo configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of mutants to generate.
    #[arg(long, default_value_t = 45)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also write the corpus as properties files plus index.json.
    #[arg(long)]
    pub corpus_dir: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

impl Default for EvalArgs {
    fn default() -> Self {
        Self { common: Common::default(), config: None, budget: 45, seed: 0, corpus_dir: None, report: None }
    }
}

#[derive(Debug, Clone, Args)]
pub struct DiffArgs {
    #[arg(long)]
    pub old: PathBuf,
    #[arg(long)]
    pub new: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Quality(QualityError),
}

impl From<QualityError> for CliError {
    fn from(e: QualityError) -> Self {
        match e {
            QualityError::Harness(h) => CliError::Harness(h),
            QualityError::Model(m) => CliError::Model(m),
            other => CliError::Quality(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Harness(_) => EXIT_HARNESS,
            CliError::Quality(QualityError::SeedConfigFails { .. }) => EXIT_FAILURES,
            _ => EXIT_USAGE,
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
}

impl Output {
    fn error(err: &CliError) -> Self {
        Self { code: err.exit_code(), stdout: String::new(), stderr: format!("error: {err}\n") }
    }
}

pub fn execute(cli: Cli) -> Output {
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Coverage(a) => cmd_coverage(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Diff(a) => cmd_diff(&a),
    }
}

fn finish(result: Result<Output, CliError>) -> Output {
    result.unwrap_or_else(|e| Output::error(&e))
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input { path: path.to_path_buf(), message: e.to_string() })
}

fn load_config(path: &Path, stderr: &mut String) -> Result<ConfigStore, CliError> {
    let parsed = parse_properties(&read(path)?)
        .map_err(|e| CliError::Input { path: path.to_path_buf(), message: e.to_string() })?;
    for w in &parsed.warnings {
        stderr.push_str(&format!(
            "warning: {}: line {}: {} repeats line {}; last value wins\n",
            path.display(),
            w.line,
            w.key,
            w.first_line
        ));
    }
    Ok(parsed.store)
}

fn load_config_or_default(path: Option<&Path>, stderr: &mut String) -> Result<ConfigStore, CliError> {
    match path {
        Some(p) => load_config(p, stderr),
        None => Ok(default_config()),
    }
}

fn registry(common: &Common) -> Result<ParamRegistry, CliError> {
    match &common.registry {
        Some(p) => load_registry(&read(p)?).map_err(|e| CliError::Input { path: p.clone(), message: e.to_string() }),
        None => Ok(demo_registry()),
    }
}

fn harness(common: &Common) -> Result<Harness, CliError> {
    let options = RunOptions {
        timeout: Duration::from_millis(common.timeout_ms),
        parallel: common.parallel,
        verify_traces: false,
    };
    Ok(demo_harness_with(registry(common)?).with_options(options))
}

fn policy(common: &Common) -> Result<ConcretizationPolicy, CliError> {
    common.policy.parse().map_err(|e| CliError::Usage(format!("--policy: {e}")))
}

fn warn_unregistered(store: &ConfigStore, registry: &ParamRegistry, stderr: &mut String) {
    for key in store.keys().filter(|k| !registry.contains(k)) {
        stderr.push_str(&format!("warning: {key} is not a registered parameter\n"));
    }
}

/// Writes JSON to `report` if given, otherwise returns it for stdout.
fn emit(json: String, report: Option<&Path>) -> Result<String, CliError> {
    match report {
        Some(path) => {
            fs::write(path, json).map_err(|e| CliError::Input { path: path.to_path_buf(), message: e.to_string() })?;
            Ok(String::new())
        }
        None => Ok(json),
    }
}

pub fn cmd_run(args: &RunArgs) -> Output {
    finish((|| {
        let mut stderr = String::new();
        let harness = harness(&args.common)?;
        let policy = policy(&args.common)?;
        let store = load_config_or_default(args.config.as_deref(), &mut stderr)?;
        warn_unregistered(&store, harness.registry(), &mut stderr);
        let report = harness.run_suite(&store, &policy).into_complete()?;
        let s = report.summary;
        stderr.push_str(&format!(
            "run: {} tests, {} passed, {} failed, {} errored (policy {})\n",
            s.total, s.passed, s.failed, s.errored, report.policy
        ));
        for r in report.detections() {
            stderr.push_str(&format!("  {:?} {}: {}\n", r.status, r.test_id, r.detail));
        }
        let code = if report.all_passed() { EXIT_OK } else { EXIT_FAILURES };
        let stdout = emit(to_json(&report)?, args.report.as_deref())?;
        Ok(Output { code, stdout, stderr })
    })())
}

pub fn cmd_coverage(args: &CoverageArgs) -> Output {
    finish((|| {
        let mut stderr = String::new();
        let harness = harness(&args.common)?;
        let policy = policy(&args.common)?;
        let store = load_config_or_default(args.config.as_deref(), &mut stderr)?;
        warn_unregistered(&store, harness.registry(), &mut stderr);
        let analysis = analyze(&harness, &store, &policy)?;
        if let Some(path) = &args.coverage {
            fs::write(path, to_json(&analysis.coverage_file())?)
                .map_err(|e| CliError::Input { path: path.clone(), message: e.to_string() })?;
        }
        let report = analysis.coverage_report();
        stderr.push_str(&format!(
            "coverage: {} parameters exercised; {} set / {} get-only tests\n",
            report.summary, report.classes.set, report.classes.get_only
        ));
        if !report.stats.uncovered.is_empty() {
            let names: Vec<&str> = report.stats.uncovered.iter().map(|p| p.as_str()).collect();
            stderr.push_str(&format!("  uncovered: {}\n", names.join(", ")));
        }
        let stdout = emit(to_json(&report)?, args.report.as_deref())?;
        Ok(Output { code: EXIT_OK, stdout, stderr })
    })())
}

pub fn cmd_select(args: &SelectArgs) -> Output {
    finish((|| {
        let mut stderr = String::new();
        let harness = harness(&args.common)?;
        let old = load_config(&args.old, &mut stderr)?;
        let new = load_config(&args.new, &mut stderr)?;
        let file = CoverageFile::from_json(&read(&args.coverage)?)
            .map_err(|e| CliError::Input { path: args.coverage.clone(), message: e.to_string() })?;
        let suite = harness.test_ids();
        let staleness = file.staleness(&suite);
        if staleness.is_stale() {
            stderr.push_str(&format!(
                "warning: coverage map is stale ({} tests added, {} removed since it was computed); \
                 new tests are always selected\n",
                staleness.added_tests.len(),
                staleness.removed_tests.len()
            ));
        }
        let diff = compute_diff(&old, &new);
        let selection = select_tests(&diff, &file.to_map(), harness.registry(), &suite)?;
        let report = SelectionReport::new(diff, selection, suite.len(), staleness);
        stderr.push_str(&format!(
            "select: {}/{} tests for {} changed parameters ({} after dependency closure)\n",
            report.selection.selected.len(),
            report.suite_size,
            report.diff.len(),
            report.selection.affected_params.len()
        ));
        let stdout = emit(to_json(&report)?, args.report.as_deref())?;
        Ok(Output { code: EXIT_OK, stdout, stderr })
    })())
}

pub fn cmd_eval(args: &EvalArgs) -> Output {
    finish((|| {
        let started = Instant::now();
        let mut stderr = String::new();
        let harness = harness(&args.common)?;
        let policy = policy(&args.common)?;
        let good = load_config_or_default(args.config.as_deref(), &mut stderr)?;
        let analysis = analyze(&harness, &good, &policy)?;
        let corpus = generate_corpus(&harness, &good, args.budget, args.seed)?;
        if let Some(dir) = &args.corpus_dir {
            write_corpus(dir, &corpus, args.seed)?;
        }
        let quality = evaluate_quality(&harness, &analysis.calibration, &corpus, &analysis.coverage, &policy)?;
        stderr.push_str(&format!(
            "eval: {} bad / {} good configs; false negatives {} ({:.1}%), false positives {} ({:.1}%); \
             {} legal misconfigurations caught\n",
            quality.bad_configs,
            quality.good_configs,
            quality.false_negatives.count,
            quality.false_negatives.rate * 100.0,
            quality.false_positives.count,
            quality.false_positives.rate * 100.0,
            quality.legal_misconfigurations
        ));
        for c in quality.configs.iter().filter(|c| c.ctest_detected != (c.label == cfgtest::quality::Label::Bad)) {
            let param = c.param.as_ref().map(|p| p.as_str()).unwrap_or("-");
            let op = c.operator.map(|o| o.name()).unwrap_or("-");
            stderr.push_str(&format!("  missed/false alarm #{}: {param} {op} {:?}\n", c.index, c.value));
        }
        let code = if quality.is_clean() { EXIT_OK } else { EXIT_FAILURES };
        let generated_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0);
        let report = EvalReport {
            schema_version: cfgtest::harness::SCHEMA_VERSION,
            seed: args.seed,
            budget: args.budget,
            coverage: analysis.coverage_report(),
            quality,
            metadata: EvalMetadata { elapsed_ms: started.elapsed().as_millis() as u64, generated_unix_ms },
        };
        let stdout = emit(to_json(&report)?, args.report.as_deref())?;
        Ok(Output { code, stdout, stderr })
    })())
}

pub fn cmd_diff(args: &DiffArgs) -> Output {
    finish((|| {
        let mut stderr = String::new();
        let old = load_config(&args.old, &mut stderr)?;
        let new = load_config(&args.new, &mut stderr)?;
        let diff = compute_diff(&old, &new);
        stderr.push_str(&format!(
            "diff: {} changed, {} added, {} removed\n",
            diff.changed.len(),
            diff.added.len(),
            diff.removed.len()
        ));
        let report = DiffReport { schema_version: cfgtest::harness::SCHEMA_VERSION, diff };
        let stdout = emit(to_json(&report)?, args.report.as_deref())?;
        Ok(Output { code: EXIT_OK, stdout, stderr })
    })())
}
