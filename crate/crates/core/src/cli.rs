//! Command-line front end.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error, 3 a property check failed.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::harness::{self, ConfigSnapshot, SuiteDef, SuiteResult};
use crate::io::{self as fio, ReportFormat};
use crate::metrics::{MetricConfig, PolicyPoint};
use crate::synth::{self, ErrorMode, ScenarioSpec, SynthTarget};
use crate::verify::{partition_by_group, GroupId, OperatingKind, ScoreDataset};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PROPERTY: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "bvfair", version, about = "Verification error rates, fairness metrics and score synthesis")]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalOpts {
    /// Master seed for synthesis.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// GARBE weight between the FMR and FNMR Gini terms.
    #[arg(long, global = true, default_value_t = 0.5)]
    alpha: f64,
    /// Fix the policy threshold at this pooled FMR.
    #[arg(long, global = true, conflicts_with = "policy_tmr")]
    policy_fmr: Option<f64>,
    /// Fix the policy threshold at this pooled TMR.
    #[arg(long, global = true)]
    policy_tmr: Option<f64>,
    /// Hill-climbing iteration budget.
    #[arg(long, global = true, default_value_t = synth::DEFAULT_MAX_ITERS)]
    iters: usize,
    /// Standard deviation of each distance move.
    #[arg(long, global = true, default_value_t = synth::DEFAULT_STEP_SCALE)]
    step_scale: f64,
    /// Distances moved per proposal.
    #[arg(long, global = true, default_value_t = synth::DEFAULT_MOVES)]
    moves: usize,
    /// Substitute this value for zero denominators instead of failing.
    #[arg(long, global = true)]
    zero_guard: Option<f64>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    out: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    format: ReportFormat,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Synthesize one score dataset at a target operating point (CSV output).
    Synth(SynthArgs),
    /// Compute the fairness metrics of one or more dataset files.
    Eval(EvalArgs),
    /// Run a scenario suite (built-in name or TOML file).
    Scenario(ScenarioArgs),
    /// Re-run the property checks on a saved JSON suite report.
    Check(CheckArgs),
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Target FMR, reached while holding --tmr.
    #[arg(long, requires = "tmr", conflicts_with_all = ["fnmr", "tnmr"])]
    fmr: Option<f64>,
    #[arg(long, requires = "fmr")]
    tmr: Option<f64>,
    /// Target FNMR, reached while holding --tnmr.
    #[arg(long, requires = "tnmr")]
    fnmr: Option<f64>,
    #[arg(long, requires = "fnmr")]
    tnmr: Option<f64>,
    #[arg(long, default_value_t = 3000)]
    genuine: usize,
    #[arg(long, default_value_t = 3000)]
    impostor: usize,
    /// Group label written on every pair.
    #[arg(long, default_value = "g1")]
    group: String,
    /// Also write the convergence report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Dataset files; their union is split by group label.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Separate global dataset for SED (defaults to the union of the inputs).
    #[arg(long)]
    global: Option<PathBuf>,
    /// Comma-separated group list (defaults to every label seen).
    #[arg(long, value_delimiter = ',')]
    groups: Vec<String>,
    #[arg(long, default_value = "eval")]
    label: String,
}

#[derive(Args, Debug)]
struct ScenarioArgs {
    /// Built-in suite name (table4..table8) or path to a suite TOML file.
    suite: String,
    /// Synthesize every scenario independently; disables the property checks.
    #[arg(long)]
    no_reuse: bool,
    /// Worker threads (results do not depend on this).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    report: PathBuf,
}

/// Parses `argv` (including the program name), runs it and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("bvfair: error: {}", one_line(&e));
            EXIT_ERROR
        }
    }
}

/// Error chain on one line, skipping causes already quoted by their parent.
fn one_line(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let g = &cli.global;
    match &cli.command {
        Command::Synth(a) => synth_cmd(g, a),
        Command::Eval(a) => eval_cmd(g, a),
        Command::Scenario(a) => scenario_cmd(g, a),
        Command::Check(a) => check_cmd(g, a),
    }
}

fn metric_config(g: &GlobalOpts, fallback: PolicyPoint) -> anyhow::Result<MetricConfig> {
    let policy = match (g.policy_fmr, g.policy_tmr) {
        (Some(f), _) => PolicyPoint::Fmr(f),
        (None, Some(t)) => PolicyPoint::Tmr(t),
        (None, None) => fallback,
    };
    let cfg = MetricConfig {
        alpha: g.alpha,
        policy,
        zero_guard: g.zero_guard,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fio::write_atomic(p, text.as_bytes())?,
        None => std::io::stdout().lock().write_all(text.as_bytes()).context("writing to stdout")?,
    }
    Ok(())
}

fn synth_cmd(g: &GlobalOpts, a: &SynthArgs) -> anyhow::Result<i32> {
    let (kind, constraint, error) = match (a.fmr, a.tmr, a.fnmr, a.tnmr) {
        (Some(f), Some(t), None, None) => (OperatingKind::FmrAtTmr, t, f),
        (None, None, Some(f), Some(t)) => (OperatingKind::FnmrAtTnmr, t, f),
        _ => bail!("give either --fmr with --tmr, or --fnmr with --tnmr"),
    };
    let target = SynthTarget {
        max_iters: g.iters,
        step_scale: g.step_scale,
        moves: g.moves,
        ..SynthTarget::new(kind, constraint, error, a.genuine, a.impostor, g.seed)
    };
    let res = synth::hill_climb(&target)?;
    let r = &res.report;
    eprintln!(
        "{} after {} iterations ({} accepted): error rate {} at constraint {}, threshold {}",
        if r.converged { "converged" } else { "warning: not converged" },
        r.iterations,
        r.accepted,
        r.achieved.achieved_rate,
        r.achieved.constraint_rate,
        r.achieved.threshold
    );
    if let Some(p) = &a.report {
        fio::write_atomic(p, (serde_json::to_string_pretty(r)? + "\n").as_bytes())?;
    }
    let ds = res.candidate.to_dataset(&GroupId::new(&a.group));
    emit(g.out.as_deref(), &fio::dataset_to_csv(&ds))?;
    Ok(EXIT_OK)
}

fn eval_cmd(g: &GlobalOpts, a: &EvalArgs) -> anyhow::Result<i32> {
    let cfg = metric_config(g, MetricConfig::default().policy)?;
    let parts = a
        .files
        .iter()
        .map(|p| fio::load_dataset(p))
        .collect::<crate::Result<Vec<_>>>()?;
    let pooled = ScoreDataset::pooled(parts.iter());
    let groups: BTreeSet<GroupId> = if a.groups.is_empty() {
        pooled.groups()
    } else {
        a.groups.iter().map(|s| GroupId::new(s.trim())).collect()
    };
    if groups.len() < 2 {
        bail!("need at least two groups, found {}", groups.len());
    }
    let per_group = partition_by_group(&pooled, &groups)?;
    let global = match &a.global {
        Some(p) => fio::load_dataset(p)?,
        None => pooled,
    };
    let row = harness::evaluate(&a.label, &per_group, &global, &cfg)?;
    for f in &row.flags {
        eprintln!("warning: {}: {f}", row.ratio_label);
    }
    let result = SuiteResult {
        suite_id: a.label.clone(),
        seed: g.seed,
        mode: None,
        config: ConfigSnapshot { metric: cfg, base: None },
        rows: vec![row],
        properties: Vec::new(),
    };
    emit(g.out.as_deref(), &fio::render_report(&result, g.format)?)?;
    Ok(EXIT_OK)
}

fn load_suite(name: &str) -> anyhow::Result<SuiteDef> {
    if let Some(def) = SuiteDef::builtin(name) {
        return Ok(def);
    }
    let path = Path::new(name);
    if !path.exists() {
        let known: Vec<_> = SuiteDef::builtin_names().collect();
        bail!("unknown suite {name:?} (built-ins: {}; or give a TOML path)", known.join(", "));
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("{}", path.display()))?;
    Ok(SuiteDef::from_toml(&text).with_context(|| format!("{}", path.display()))?)
}

fn scenario_base(g: &GlobalOpts, mode: ErrorMode, no_reuse: bool) -> ScenarioSpec {
    ScenarioSpec {
        reuse: !no_reuse,
        max_iters: g.iters,
        step_scale: g.step_scale,
        moves: g.moves,
        ..ScenarioSpec::standard(mode, synth::RatioList(Vec::new()), g.seed)
    }
}

fn scenario_cmd(g: &GlobalOpts, a: &ScenarioArgs) -> anyhow::Result<i32> {
    let suite = load_suite(&a.suite)?;
    let base = scenario_base(g, suite.mode, a.no_reuse);
    let cfg = metric_config(g, MetricConfig::for_constraint(suite.mode.kind(), base.target_constraint).policy)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = a.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().context("starting worker pool")?;
    let result = pool.install(|| harness::run_suite(&suite, &base, &cfg))?;
    for row in &result.rows {
        for f in &row.flags {
            eprintln!("warning: {}: {f}", row.ratio_label);
        }
    }
    for p in result.properties.iter().filter(|p| !p.passed) {
        eprintln!("property failed: {}: {}", p.name, p.detail);
    }
    emit(g.out.as_deref(), &fio::render_report(&result, g.format)?)?;
    Ok(EXIT_OK)
}

fn check_cmd(g: &GlobalOpts, a: &CheckArgs) -> anyhow::Result<i32> {
    let mut result = fio::load_suite_result(&a.report)?;
    result.properties = harness::check_properties(&result)?;
    let mut text = String::new();
    for p in &result.properties {
        text.push_str(&format!("{} {}: {}\n", if p.passed { "PASS" } else { "FAIL" }, p.name, p.detail));
    }
    match &g.out {
        Some(path) => {
            fio::save_report(&result, g.format, path)?;
            print!("{text}");
        }
        None => print!("{text}"),
    }
    Ok(if result.all_properties_pass() { EXIT_OK } else { EXIT_PROPERTY })
}
