//! The `nbfreq` command line.
//!
//! Every command that writes a file also writes `<file>.manifest.json`
//! recording the resolved flags, paths, seed and timing. Output files
//! themselves carry no timestamps, so reruns are byte-identical.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{mine_allconf, mine_frequent};
use crate::error::Error;
use crate::evaluation::{score, sweep, Method, ScoringMode, SweepSpec};
use crate::itemset::Itemset;
use crate::nb_mining::{nb_dfs, MinerConfig};
use crate::nb_model::{fit_database, FitOptions, NbParams};
use crate::synthgen::{generate, GenConfig, GroundTruth};
use crate::transactions::{load_basket, TransactionDatabase};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Lib(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("writing {path}: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "nbfreq", version, about = "Mine itemsets under a negative binomial frequency model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the frequency model to a basket file.
    Fit(FitArgs),
    /// Mine itemsets with locally chosen thresholds.
    Mine(MineArgs),
    /// Mine itemsets above a global minimum support.
    MineSupport(SupportArgs),
    /// Mine itemsets above a global all-confidence threshold.
    MineAllconf(AllConfArgs),
    /// Generate a synthetic basket file and its pattern list.
    Generate(GenerateArgs),
    /// Score mined itemsets against a pattern list.
    Evaluate(EvaluateArgs),
    /// Sweep miners over parameter grids and score every run.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct FitOpts {
    /// Fraction of the most frequent items left out of the fit.
    #[arg(long, default_value_t = 0.025)]
    pub trim: f64,
    /// Number of available items, if known (skips estimating unseen items).
    #[arg(long)]
    pub total_items: Option<u64>,
}

impl FitOpts {
    fn options(&self) -> FitOptions {
        FitOptions {
            trim: self.trim,
            total_items: self.total_items,
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    pub basket: PathBuf,
    #[command(flatten)]
    pub fit: FitOpts,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MineArgs {
    pub basket: PathBuf,
    /// Model file from `fit`.
    #[arg(long, conflicts_with = "fit_inline")]
    pub model: Option<PathBuf>,
    /// Fit the model on the input instead of loading one.
    #[arg(long)]
    pub fit_inline: bool,
    #[command(flatten)]
    pub fit: FitOpts,
    /// Required predicted precision.
    #[arg(long, default_value_t = 0.95)]
    pub pi: f64,
    /// Required fraction of generating subsets.
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    #[arg(long)]
    pub max_size: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct SupportArgs {
    pub basket: PathBuf,
    /// Minimum support as a fraction of transactions.
    #[arg(long)]
    pub min_support: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AllConfArgs {
    pub basket: PathBuf,
    #[arg(long)]
    pub min_allconf: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum Preset {
    #[value(name = "artif-1")]
    Artif1,
    #[value(name = "artif-2")]
    Artif2,
}

impl Preset {
    fn config(self) -> GenConfig {
        match self {
            Preset::Artif1 => GenConfig::artif_1(),
            Preset::Artif2 => GenConfig::artif_2(),
        }
    }
}

/// Generator settings; unset flags fall back to the preset (artif-1 by
/// default).
#[derive(Debug, Args, Serialize)]
pub struct GenOpts {
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub transactions: Option<usize>,
    #[arg(long)]
    pub avg_transaction_size: Option<f64>,
    #[arg(long)]
    pub items: Option<u32>,
    #[arg(long)]
    pub patterns: Option<usize>,
    #[arg(long)]
    pub avg_pattern_size: Option<f64>,
    #[arg(long)]
    pub correlation: Option<f64>,
    #[arg(long)]
    pub corruption: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl GenOpts {
    fn config(&self) -> GenConfig {
        let mut c = self.preset.map_or_else(GenConfig::artif_1, Preset::config);
        c.n_transactions = self.transactions.unwrap_or(c.n_transactions);
        c.avg_transaction_size = self.avg_transaction_size.unwrap_or(c.avg_transaction_size);
        c.n_items = self.items.unwrap_or(c.n_items);
        c.n_patterns = self.patterns.unwrap_or(c.n_patterns);
        c.avg_pattern_size = self.avg_pattern_size.unwrap_or(c.avg_pattern_size);
        c.correlation = self.correlation.unwrap_or(c.correlation);
        c.corruption = self.corruption.unwrap_or(c.corruption);
        c.seed = self.seed.unwrap_or(c.seed);
        c
    }
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub gen: GenOpts,
    /// Basket file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Pattern list to write.
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ScoringArg {
    /// Patterns and all their subsets of size ≥ 2.
    Closure,
    /// Patterns of size ≥ 2 only.
    PatternsOnly,
}

impl From<ScoringArg> for ScoringMode {
    fn from(s: ScoringArg) -> Self {
        match s {
            ScoringArg::Closure => ScoringMode::Closure,
            ScoringArg::PatternsOnly => ScoringMode::PatternsOnly,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// Itemset file (first tab-separated column holds the items).
    #[arg(long)]
    pub mined: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long, value_enum, default_value = "closure")]
    pub scoring_mode: ScoringArg,
    /// Report file; printed to standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MethodArg {
    Nb,
    MinSupport,
    AllConfidence,
}

#[derive(Debug, Args, Serialize)]
pub struct BenchmarkArgs {
    /// Basket file to mine; requires --truth.
    #[arg(long, requires = "truth")]
    pub basket: Option<PathBuf>,
    /// Pattern list belonging to --basket.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Generate the data instead of reading it.
    #[command(flatten)]
    pub gen: GenOpts,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "nb,min-support,all-confidence")]
    pub methods: Vec<MethodArg>,
    /// θ values; one π sweep runs per value.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub thetas: Vec<f64>,
    /// π grid for the model-based miner.
    #[arg(long, value_delimiter = ',')]
    pub pis: Option<Vec<f64>>,
    /// Minimum-support grid.
    #[arg(long, value_delimiter = ',')]
    pub supports: Option<Vec<f64>>,
    /// All-confidence grid.
    #[arg(long, value_delimiter = ',')]
    pub allconfs: Option<Vec<f64>>,
    /// Model file; fitted on the data when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "closure")]
    pub scoring_mode: ScoringArg,
    #[arg(long)]
    pub max_size: Option<usize>,
    /// Model-based runs yielding more itemsets than this are reported as
    /// failed.
    #[arg(long)]
    pub max_itemsets: Option<usize>,
    /// Worker threads (0: one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub started_unix_ms: u128,
    pub elapsed_seconds: f64,
    pub tool_version: String,
}

struct Run {
    command: &'static str,
    started: SystemTime,
    clock: Instant,
}

impl Run {
    fn start(command: &'static str) -> Self {
        Run {
            command,
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }

    fn finish(
        self,
        flags: &impl Serialize,
        seed: Option<u64>,
        inputs: &[&Path],
        outputs: &[&Path],
    ) -> CliResult<()> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            flags: serde_json::to_value(flags).unwrap_or(serde_json::Value::Null),
            seed,
            inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
            outputs: outputs.iter().map(|p| p.to_path_buf()).collect(),
            started_unix_ms: self
                .started
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_millis()),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let path = manifest_path(outputs[0]);
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, json + "\n").map_err(|source| CliError::Write { path, source })
    }
}

/// `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> CliResult<()> {
    let wrap = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(wrap)?);
    for line in lines {
        writeln!(w, "{line}").map_err(wrap)?;
    }
    w.flush().map_err(wrap)
}

/// Reads the itemset column of an itemset file.
pub fn read_itemsets(path: &Path) -> CliResult<Vec<Itemset>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let field = line.split('\t').next().unwrap_or("").trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        let items = field
            .split_ascii_whitespace()
            .map(|t| {
                t.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid item id {t:?}"),
                })
            })
            .collect::<crate::Result<Itemset>>()?;
        out.push(items);
    }
    Ok(out)
}

fn cmd_fit(args: &FitArgs) -> CliResult<()> {
    let run = Run::start("fit");
    let db = load_basket(&args.basket)?;
    let report = fit_database(&db, &args.fit.options())?;
    report.params.save(&args.out)?;
    let p = &report.params;
    println!("k\t{}", p.k);
    println!("a\t{}", p.a);
    println!("n_total\t{}", p.n_total);
    println!("em_iterations\t{}", p.em_iterations);
    println!("trimmed_items\t{}", p.trimmed_items);
    match &report.gof {
        Ok(g) => println!("gof\tchi2={}\tdf={}\tp={}", g.chi2, g.df, g.p_value),
        Err(e) => println!("gof\tunavailable: {e}"),
    }
    run.finish(args, None, &[&args.basket], &[&args.out])
}

fn resolve_model(db: &TransactionDatabase, args: &MineArgs) -> CliResult<NbParams> {
    match (&args.model, args.fit_inline) {
        (Some(path), _) => Ok(NbParams::load(path)?),
        (None, true) => Ok(fit_database(db, &args.fit.options())?.params),
        (None, false) => Err(CliError::Usage("either --model or --fit-inline is required".into())),
    }
}

fn cmd_mine(args: &MineArgs) -> CliResult<()> {
    let run = Run::start("mine");
    let db = load_basket(&args.basket)?;
    let params = resolve_model(&db, args)?;
    let config = MinerConfig::new(params, args.pi, args.theta)?.with_max_size(args.max_size);
    let mined = nb_dfs(&db, &config)?;
    write_lines(&args.out, mined.iter().map(|m| m.to_line()))?;
    let mut inputs = vec![args.basket.as_path()];
    if let Some(m) = &args.model {
        inputs.push(m);
    }
    run.finish(args, None, &inputs, &[&args.out])
}

fn cmd_mine_support(args: &SupportArgs) -> CliResult<()> {
    let run = Run::start("mine-support");
    let db = load_basket(&args.basket)?;
    let mined = mine_frequent(&db, args.min_support)?;
    let sigma_freq = (args.min_support * db.transaction_count() as f64).ceil() as u64;
    write_lines(
        &args.out,
        mined.iter().filter(|f| f.items.len() >= 2).map(|f| f.to_line(sigma_freq)),
    )?;
    run.finish(args, None, &[&args.basket], &[&args.out])
}

fn cmd_mine_allconf(args: &AllConfArgs) -> CliResult<()> {
    let run = Run::start("mine-allconf");
    let db = load_basket(&args.basket)?;
    let mined = mine_allconf(&db, args.min_allconf)?;
    write_lines(&args.out, mined.iter().map(|f| f.to_line(args.min_allconf)))?;
    run.finish(args, None, &[&args.basket], &[&args.out])
}

fn cmd_generate(args: &GenerateArgs) -> CliResult<()> {
    let run = Run::start("generate");
    let config = args.gen.config();
    let (db, truth) = generate(&config)?;
    db.save_basket(&args.out)?;
    truth.save(&args.truth)?;
    run.finish(
        &(args, &config),
        Some(config.seed),
        &[],
        &[&args.out, &args.truth],
    )
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

fn cmd_evaluate(args: &EvaluateArgs) -> CliResult<()> {
    let run = Run::start("evaluate");
    let mined = read_itemsets(&args.mined)?;
    let truth = GroundTruth::load(&args.truth)?;
    let r = score(&mined, &truth, args.scoring_mode.into());
    let mut lines = vec![
        "metric\tvalue".to_string(),
        format!("tp\t{}", r.true_positives),
        format!("fp\t{}", r.false_positives),
        format!("positives_total\t{}", r.positives_total),
        format!("precision\t{}", fmt_opt(r.precision)),
        format!("recall\t{}", fmt_opt(r.recall)),
        String::new(),
        "size\ttp\tfp".to_string(),
    ];
    lines.extend(r.per_size.iter().map(|(s, c)| format!("{s}\t{}\t{}", c.tp, c.fp)));
    match &args.out {
        Some(out) => {
            write_lines(out, lines)?;
            run.finish(args, None, &[&args.mined, &args.truth], &[out])
        }
        None => {
            for l in lines {
                println!("{l}");
            }
            Ok(())
        }
    }
}

fn cmd_benchmark(args: &BenchmarkArgs) -> CliResult<()> {
    let run = Run::start("benchmark");
    let (db, truth, seed) = match (&args.basket, &args.truth) {
        (Some(b), Some(t)) => (load_basket(b)?, GroundTruth::load(t)?, None),
        (None, None) => {
            let config = args.gen.config();
            let (db, truth) = generate(&config)?;
            (db, truth, Some(config.seed))
        }
        _ => return Err(CliError::Usage("--basket and --truth go together".into())),
    };
    let mut runs = Vec::new();
    for m in &args.methods {
        match m {
            MethodArg::Nb => {
                for &theta in &args.thetas {
                    let method = Method::Nb { theta };
                    runs.push((method, args.pis.clone().unwrap_or_else(|| method.default_grid())));
                }
            }
            MethodArg::MinSupport => runs.push((
                Method::MinSupport,
                args.supports.clone().unwrap_or_else(|| Method::MinSupport.default_grid()),
            )),
            MethodArg::AllConfidence => runs.push((
                Method::AllConfidence,
                args.allconfs.clone().unwrap_or_else(|| Method::AllConfidence.default_grid()),
            )),
        }
    }
    let spec = SweepSpec {
        runs,
        params: args.model.as_ref().map(NbParams::load).transpose()?,
        scoring_mode: args.scoring_mode.into(),
        max_size: args.max_size,
        max_itemsets: args.max_itemsets,
        jobs: args.jobs,
    };
    let result = sweep(&db, &truth, &spec)?;
    for (entry, msg) in result.failures() {
        eprintln!("{} at {}: {msg}", entry.method.label(), entry.parameter);
    }
    std::fs::write(&args.out, result.to_tsv()).map_err(|source| CliError::Write {
        path: args.out.clone(),
        source,
    })?;
    let mut inputs: Vec<&Path> = Vec::new();
    inputs.extend(args.basket.as_deref());
    inputs.extend(args.truth.as_deref());
    inputs.extend(args.model.as_deref());
    run.finish(args, seed, &inputs, &[&args.out])
}

pub fn execute(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Mine(a) => cmd_mine(a),
        Command::MineSupport(a) => cmd_mine_support(a),
        Command::MineAllconf(a) => cmd_mine_allconf(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Benchmark(a) => cmd_benchmark(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
