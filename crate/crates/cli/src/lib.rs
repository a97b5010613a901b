//! `bnmc` subcommands. Everything but process exit lives here so the
//! commands can be driven from tests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use bnmc::chain::{build_mc, size_bound_for, BuildOptions, ChainError, DEFAULT_STATE_CAP};
use bnmc::oracle::oracle_terms;
use bnmc::psdd::{parse_psdd, PsddError};
use bnmc::query::{self, ratio};
use bnmc::reach;
use bnmc::symbolic::{bench_evidence, BenchRow, BitLayout, EvidenceStrategy, SymbolicError};
use bnmc::{
    compile, export_dot, export_jani, parse_bif, Assignment, BayesianNetwork, CompileOptions,
    InferenceError, Query, VarId,
};

pub const CAP_ENV: &str = "BNMC_STATE_CAP";
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    IllConditioned(f64),
    Cap(String),
    /// Engines returned different answers.
    Disagreement(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Disagreement(_) => 1,
            CliError::Input(_) | CliError::Io(_) => 2,
            CliError::IllConditioned(_) => 3,
            CliError::Cap(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "{m}"),
            CliError::IllConditioned(d) => {
                write!(f, "ill-conditioned query: evidence has probability {d}")
            }
            CliError::Cap(m) => write!(f, "{m}"),
            CliError::Disagreement(m) => write!(f, "engines disagree: {m}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<InferenceError> for CliError {
    fn from(e: InferenceError) -> Self {
        match e {
            InferenceError::IllConditioned(d) => CliError::IllConditioned(d),
            InferenceError::Cap(m) => CliError::Cap(m),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::TooLarge { .. } | ChainError::PathCap(_) => CliError::Cap(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SymbolicError> for CliError {
    fn from(e: SymbolicError) -> Self {
        match e {
            SymbolicError::TooManyBits(..) => CliError::Cap(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<PsddError> for CliError {
    fn from(e: PsddError) -> Self {
        CliError::Input(e.to_string())
    }
}

type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Parser, Debug)]
#[command(name = "bnmc", version, about = "Exact Bayesian network inference by Markov chain reachability")]
pub struct Cli {
    /// TOML file with `state_cap` and `tolerance`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print network statistics.
    Stats {
        #[arg(required = true)]
        bif: Vec<PathBuf>,
    },
    /// Translate a network into its Markov chain.
    Translate(TranslateArgs),
    /// Answer a conditional query.
    Infer(InferArgs),
    /// Time symbolic queries for growing evidence sets.
    Bench(BenchArgs),
    /// Evaluate a term on a PSDD.
    PsddEval(PsddArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Jani,
    Dot,
}

#[derive(Args, Debug)]
pub struct TranslateArgs {
    pub bif: PathBuf,
    #[arg(long, value_enum, default_value = "jani")]
    pub format: Format,
    #[arg(long)]
    pub keep_zero_edges: bool,
    /// Restrict to these variables (comma separated, closed under parents).
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<String>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// State cap; overrides the config file and the environment.
    #[arg(long)]
    pub cap: Option<u128>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum EngineChoice {
    Explicit,
    Symbolic,
    Oracle,
    All,
}

#[derive(Args, Debug, Default)]
pub struct QueryArgs {
    /// Evidence binding `var=value`; repeatable.
    #[arg(long = "ev")]
    pub evidence: Vec<String>,
    /// Hypothesis binding `var=value`; repeatable.
    #[arg(long = "hyp")]
    pub hypothesis: Vec<String>,
}

#[derive(Args, Debug)]
pub struct InferArgs {
    pub bif: PathBuf,
    #[command(flatten)]
    pub query: QueryArgs,
    #[arg(long, value_enum, default_value = "symbolic")]
    pub engine: EngineChoice,
    #[arg(long)]
    pub keep_zero_edges: bool,
    #[arg(long)]
    pub cap: Option<u128>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    First,
    Random,
    Last,
}

impl From<StrategyArg> for EvidenceStrategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::First => EvidenceStrategy::First,
            StrategyArg::Random => EvidenceStrategy::Random,
            StrategyArg::Last => EvidenceStrategy::Last,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    Contiguous,
    BitPlanes,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    pub bif: PathBuf,
    /// Evidence selection; repeatable or comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "first")]
    pub strategy: Vec<StrategyArg>,
    /// Evidence counts, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub counts: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit CSV instead of a table.
    #[arg(long)]
    pub csv: bool,
    /// Worker threads, each with its own diagram manager.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, value_enum, default_value = "contiguous")]
    pub layout: LayoutArg,
}

#[derive(Args, Debug)]
pub struct PsddArgs {
    #[arg(long)]
    pub vtree: PathBuf,
    #[arg(long)]
    pub psdd: PathBuf,
    #[command(flatten)]
    pub query: QueryArgs,
}

#[derive(Debug, Default, Deserialize, Clone, Copy, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub state_cap: Option<u64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub state_cap: u128,
    pub tolerance: f64,
}

impl Settings {
    /// Cap precedence: flag, config file, environment, built-in default.
    pub fn resolve(config: Option<&Path>, env_cap: Option<&str>, flag_cap: Option<u128>) -> Result<Settings> {
        let config = match config {
            Some(path) => {
                let text = read(path)?;
                toml::from_str::<Config>(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
            }
            None => Config::default(),
        };
        let env_cap = match env_cap {
            Some(s) => Some(
                s.trim()
                    .parse::<u128>()
                    .map_err(|_| CliError::Input(format!("{CAP_ENV}={s:?} is not a number")))?,
            ),
            None => None,
        };
        Ok(Settings {
            state_cap: flag_cap
                .or(config.state_cap.map(u128::from))
                .or(env_cap)
                .unwrap_or(DEFAULT_STATE_CAP),
            tolerance: config.tolerance.unwrap_or(DEFAULT_TOLERANCE),
        })
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_network(path: &Path) -> Result<BayesianNetwork> {
    let text = read(path)?;
    let mut bn = parse_bif(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    if bn.name == "unknown" || bn.name.is_empty() {
        if let Some(stem) = path.file_stem() {
            bn.name = stem.to_string_lossy().into_owned();
        }
    }
    Ok(bn)
}

pub fn parse_assignment(bn: &BayesianNetwork, bindings: &[String]) -> Result<Assignment> {
    query::parse_assignment(bn, bindings).map_err(|e| CliError::Input(e.to_string()))
}

fn resolve_name<'a>(names: impl IntoIterator<Item = &'a str>, name: &str) -> Result<usize> {
    query::resolve_name(names, name).map_err(|e| CliError::Input(e.to_string()))
}

fn split_binding(binding: &str) -> Result<(&str, &str)> {
    query::split_binding(binding).map_err(|e| CliError::Input(e.to_string()))
}

pub fn parse_query(bn: &BayesianNetwork, q: &QueryArgs) -> Result<Query> {
    Ok(Query::new(
        parse_assignment(bn, &q.evidence)?,
        parse_assignment(bn, &q.hypothesis)?,
    )?)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let env_cap = std::env::var(CAP_ENV).ok();
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Stats { bif } => cmd_stats(bif, out),
        Command::Translate(a) => {
            let settings = Settings::resolve(config, env_cap.as_deref(), a.cap)?;
            cmd_translate(a, settings, out)
        }
        Command::Infer(a) => {
            let settings = Settings::resolve(config, env_cap.as_deref(), a.cap)?;
            cmd_infer(a, settings, out)
        }
        Command::Bench(a) => cmd_bench(a, out),
        Command::PsddEval(a) => cmd_psdd_eval(a, out),
    }
}

pub fn cmd_stats(paths: &[PathBuf], out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "{:<16} {:>9} {:>7} {:>11} {:>5} {:>6} {:>11}",
        "BN", "#Vertices", "#Edges", "InDegreeMax", "Dmax", "AMB", "#Parameters"
    )?;
    for path in paths {
        let bn = load_network(path)?;
        let s = bn.stats();
        writeln!(
            out,
            "{:<16} {:>9} {:>7} {:>11} {:>5} {:>6.2} {:>11}",
            bn.name,
            s.vertex_count,
            s.edge_count,
            s.max_in_degree,
            s.max_domain_size,
            s.avg_markov_blanket,
            s.parameter_count
        )?;
    }
    Ok(())
}

fn restrict(bn: BayesianNetwork, vars: &[String]) -> Result<BayesianNetwork> {
    if vars.is_empty() {
        return Ok(bn);
    }
    let keep: Vec<VarId> = vars
        .iter()
        .map(|n| resolve_name(bn.variables().iter().map(|v| v.name.as_str()), n).map(VarId))
        .collect::<Result<_>>()?;
    bn.sub_network(&keep).map_err(|e| CliError::Input(e.to_string()))
}

pub fn cmd_translate(a: &TranslateArgs, settings: Settings, out: &mut dyn Write) -> Result<()> {
    let bn = restrict(load_network(&a.bif)?, &a.vars)?;
    let order = bn.topological_order().map_err(|e| CliError::Input(e.to_string()))?;
    let bound = size_bound_for(&bn, &order);
    let options = BuildOptions {
        keep_zero_edges: a.keep_zero_edges,
        state_cap: settings.state_cap,
    };
    let mc = build_mc(&bn, &order, options)?;
    let text = match a.format {
        Format::Jani => export_jani(&mc),
        Format::Dot => export_dot(&mc),
    };
    let report = format!("states: {}\nbound: {bound}", mc.len());
    match &a.out {
        Some(path) => {
            fs::write(path, text)?;
            writeln!(out, "{report}")?;
        }
        None => {
            out.write_all(text.as_bytes())?;
            eprintln!("{report}");
        }
    }
    Ok(())
}

/// Outcome of one engine: a probability or an ill-conditioned verdict.
type Verdict = std::result::Result<f64, f64>;

fn verdict(num: f64, den: f64) -> Verdict {
    match ratio(num, den) {
        Ok(p) => Ok(p),
        Err(_) => Err(den),
    }
}

pub fn run_engine(
    bn: &BayesianNetwork,
    engine: EngineChoice,
    query: &Query,
    settings: Settings,
    keep_zero_edges: bool,
) -> Result<Verdict> {
    query.check(bn)?;
    let order = bn.topological_order().map_err(|e| CliError::Input(e.to_string()))?;
    let (num, den) = match engine {
        EngineChoice::Explicit => {
            let options = BuildOptions {
                keep_zero_edges,
                state_cap: settings.state_cap,
            };
            let mc = build_mc(bn, &order, options)?;
            reach::query_terms(&mc, query)?
        }
        EngineChoice::Symbolic => compile(bn, &order, CompileOptions::default())?.query_terms(query)?,
        EngineChoice::Oracle => oracle_terms(bn, query, settings.state_cap)?,
        EngineChoice::All => unreachable!("expanded by the caller"),
    };
    Ok(verdict(num, den))
}

pub fn cmd_infer(a: &InferArgs, settings: Settings, out: &mut dyn Write) -> Result<()> {
    let bn = load_network(&a.bif)?;
    let query = parse_query(&bn, &a.query)?;
    if a.engine != EngineChoice::All {
        return match run_engine(&bn, a.engine, &query, settings, a.keep_zero_edges)? {
            Ok(p) => Ok(writeln!(out, "{p}")?),
            Err(den) => Err(CliError::IllConditioned(den)),
        };
    }
    let engines = [EngineChoice::Explicit, EngineChoice::Symbolic, EngineChoice::Oracle];
    let mut results = Vec::new();
    for e in engines {
        let v = run_engine(&bn, e, &query, settings, a.keep_zero_edges)?;
        let name = format!("{e:?}").to_lowercase();
        match v {
            Ok(p) => writeln!(out, "{name:<9} {p}")?,
            Err(_) => writeln!(out, "{name:<9} ill-conditioned")?,
        }
        results.push(v);
    }
    let probs: Vec<f64> = results.iter().filter_map(|r| r.ok()).collect();
    if !probs.is_empty() && probs.len() < results.len() {
        return Err(CliError::Disagreement("ill-conditioned on some engines only".into()));
    }
    if probs.is_empty() {
        let den = results[0].err().unwrap_or(0.0);
        return Err(CliError::IllConditioned(den));
    }
    let max = probs.iter().cloned().fold(f64::MIN, f64::max);
    let min = probs.iter().cloned().fold(f64::MAX, f64::min);
    writeln!(out, "{:<9} {}", "deviation", max - min)?;
    if max - min > settings.tolerance {
        return Err(CliError::Disagreement(format!(
            "deviation {} above tolerance {}",
            max - min,
            settings.tolerance
        )));
    }
    Ok(())
}

pub fn bench_rows(a: &BenchArgs, bn: &BayesianNetwork) -> Result<Vec<BenchRow>> {
    let order = bn.topological_order().map_err(|e| CliError::Input(e.to_string()))?;
    let layout = match a.layout {
        LayoutArg::Contiguous => BitLayout::Contiguous,
        LayoutArg::BitPlanes => BitLayout::BitPlanes,
    };
    let options = CompileOptions { layout };
    let tasks: Vec<(EvidenceStrategy, usize)> = a
        .strategy
        .iter()
        .flat_map(|&s| a.counts.iter().map(move |&c| (EvidenceStrategy::from(s), c)))
        .collect();
    let jobs = a.jobs.clamp(1, tasks.len().max(1));
    let chunk = tasks.len().div_ceil(jobs).max(1);
    let results: Vec<Result<Vec<BenchRow>>> = thread::scope(|scope| {
        let handles: Vec<_> = tasks
            .chunks(chunk)
            .map(|part| {
                let order = &order;
                scope.spawn(move || -> Result<Vec<BenchRow>> {
                    let mut sym = compile(bn, order, options)?;
                    part.iter()
                        .map(|&(s, c)| Ok(bench_evidence(&mut sym, s, c, a.seed)?))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bench worker panicked"))
            .collect()
    });
    let mut rows = Vec::with_capacity(tasks.len());
    for r in results {
        rows.extend(r?);
    }
    Ok(rows)
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write) -> Result<()> {
    let bn = load_network(&a.bif)?;
    let rows = bench_rows(a, &bn)?;
    if a.csv {
        writeln!(out, "{}", BenchRow::CSV_HEADER)?;
        for r in &rows {
            writeln!(out, "{}", r.to_csv(&bn.name))?;
        }
    } else {
        writeln!(out, "{:<8} {:>9} {:>14} {:>22}", "strategy", "evidence", "time (ms)", "result")?;
        for r in &rows {
            let result = r.result.map_or_else(|| "ill-conditioned".to_string(), |p| p.to_string());
            writeln!(
                out,
                "{:<8} {:>9} {:>14.3} {:>22}",
                r.strategy.as_str(),
                r.evidence_count,
                r.query_time_ns as f64 / 1e6,
                result
            )?;
        }
    }
    Ok(())
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "1" | "true" | "True" | "T" | "yes" => Some(true),
        "0" | "false" | "False" | "F" | "no" => Some(false),
        _ => None,
    }
}

fn psdd_term(p: &bnmc::Psdd, bindings: &[String], term: &mut [Option<bool>]) -> Result<()> {
    for b in bindings {
        let (name, value) = split_binding(b)?;
        let var = resolve_name(p.vtree().variables().iter().map(String::as_str), name)?;
        let value = parse_bool(value)
            .ok_or_else(|| CliError::Input(format!("{value:?} is not a boolean value")))?;
        if term[var].is_some_and(|old| old != value) {
            return Err(CliError::Input(format!("{} bound twice", p.vtree().variables()[var])));
        }
        term[var] = Some(value);
    }
    Ok(())
}

pub fn cmd_psdd_eval(a: &PsddArgs, out: &mut dyn Write) -> Result<()> {
    let p = parse_psdd(&read(&a.vtree)?, &read(&a.psdd)?)?;
    let report = p.validate_partition()?;
    if let Some(bad) = report.decisions.iter().find(|d| !d.passes()) {
        return Err(CliError::Input(format!(
            "decision node {} is not a partition (consistent {}, exclusive {}, exhaustive {})",
            bad.node, bad.consistent, bad.exclusive, bad.exhaustive
        )));
    }
    let n = p.vtree().variables().len();
    let mut evidence = vec![None; n];
    psdd_term(&p, &a.query.evidence, &mut evidence)?;
    let mut both = evidence.clone();
    psdd_term(&p, &a.query.hypothesis, &mut both)?;
    let num = p.prob_term(&both);
    if a.query.evidence.is_empty() {
        writeln!(out, "{num}")?;
    } else {
        let den = p.prob_term(&evidence);
        match ratio(num, den) {
            Ok(v) => writeln!(out, "{v}")?,
            Err(_) => return Err(CliError::IllConditioned(den)),
        }
    }
    Ok(())
}
