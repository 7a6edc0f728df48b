//! Scoring mined itemsets against generator ground truth, and parameter
//! sweeps over the three miners.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::baselines::{mine_allconf, mine_frequent};
use crate::error::{Error, Result};
use crate::itemset::{Item, Itemset};
use crate::nb_mining::{nb_dfs, MinerConfig};
use crate::nb_model::{fit_database, FitOptions, NbParams};
use crate::synthgen::GroundTruth;
use crate::transactions::TransactionDatabase;

/// Which itemsets count as true positives.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub enum ScoringMode {
    /// Truth patterns and all their subsets of size ≥ 2.
    #[default]
    Closure,
    /// Truth patterns of size ≥ 2 only.
    PatternsOnly,
}

fn add_subsets(items: &[Item], out: &mut HashSet<Itemset>) {
    fn rec(items: &[Item], start: usize, current: &mut Vec<Item>, out: &mut HashSet<Itemset>) {
        if current.len() >= 2 {
            out.insert(Itemset::from_sorted(current.clone()));
        }
        for i in start..items.len() {
            current.push(items[i]);
            rec(items, i + 1, current, out);
            current.pop();
        }
    }
    if items.len() >= 2 && out.contains(&Itemset::from_sorted(items.to_vec())) {
        // the subsets of an already closed pattern are present too
        return;
    }
    rec(items, 0, &mut Vec::new(), out);
}

/// All truth patterns and their subsets, restricted to size ≥ 2.
pub fn positives_closure(truth: &GroundTruth) -> HashSet<Itemset> {
    positives(truth, ScoringMode::Closure)
}

pub fn positives(truth: &GroundTruth, mode: ScoringMode) -> HashSet<Itemset> {
    let mut out = HashSet::new();
    for p in &truth.patterns {
        match mode {
            ScoringMode::Closure => add_subsets(p.items.items(), &mut out),
            ScoringMode::PatternsOnly if p.items.len() >= 2 => {
                out.insert(p.items.clone());
            }
            ScoringMode::PatternsOnly => {}
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct SizeCounts {
    pub tp: u64,
    pub fp: u64,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct EvalReport {
    pub true_positives: u64,
    pub false_positives: u64,
    pub positives_total: u64,
    /// `None` when nothing was mined.
    pub precision: Option<f64>,
    /// `None` when there are no positives.
    pub recall: Option<f64>,
    pub per_size: BTreeMap<usize, SizeCounts>,
}

/// Scores a mined collection against a precomputed positives set.
/// Duplicates and itemsets of size < 2 are ignored.
pub fn score_against<'a>(
    mined: impl IntoIterator<Item = &'a Itemset>,
    positives: &HashSet<Itemset>,
) -> EvalReport {
    let mut seen = HashSet::new();
    let mut per_size: BTreeMap<usize, SizeCounts> = BTreeMap::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for m in mined {
        if m.len() < 2 || !seen.insert(m) {
            continue;
        }
        let slot = per_size.entry(m.len()).or_default();
        if positives.contains(m) {
            tp += 1;
            slot.tp += 1;
        } else {
            fp += 1;
            slot.fp += 1;
        }
    }
    let total = positives.len() as u64;
    EvalReport {
        true_positives: tp,
        false_positives: fp,
        positives_total: total,
        precision: (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64),
        recall: (total > 0).then(|| tp as f64 / total as f64),
        per_size,
    }
}

pub fn score<'a>(
    mined: impl IntoIterator<Item = &'a Itemset>,
    truth: &GroundTruth,
    mode: ScoringMode,
) -> EvalReport {
    score_against(mined, &positives(truth, mode))
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// True and false positive rates, taking as negatives every itemset of size
/// 2 to `max_size` over `observed_items` items that is not a positive.
pub fn roc_point(report: &EvalReport, observed_items: u64, max_size: u64) -> (f64, f64) {
    let universe: f64 = (2..=max_size.min(observed_items)).map(|k| binomial(observed_items, k)).sum();
    let negatives = universe - report.positives_total as f64;
    let tpr = report.recall.unwrap_or(0.0);
    let fpr = if negatives > 0.0 {
        report.false_positives as f64 / negatives
    } else {
        0.0
    };
    (tpr, fpr)
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub enum Method {
    /// Model-based miner at a fixed θ; the grid varies π.
    Nb { theta: f64 },
    /// Grid varies the minimum support.
    MinSupport,
    /// Grid varies the all-confidence threshold.
    AllConfidence,
}

impl Method {
    pub fn label(&self) -> String {
        match self {
            Method::Nb { theta } => format!("nb-theta-{theta}"),
            Method::MinSupport => "min-support".into(),
            Method::AllConfidence => "all-confidence".into(),
        }
    }

    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            Method::Nb { .. } => vec![0.999, 0.99, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1],
            Method::MinSupport => vec![
                0.01, 0.005, 0.004, 0.003, 0.002, 0.0015, 0.0013, 0.001, 0.0007, 0.0005,
            ],
            Method::AllConfidence => vec![
                0.6, 0.5, 0.4, 0.3, 0.2, 0.1, 0.05, 0.04, 0.03, 0.02, 0.01,
            ],
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepSpec {
    /// Methods with their parameter grids, run in this order.
    pub runs: Vec<(Method, Vec<f64>)>,
    /// Model for the NB runs; fitted with default options when absent.
    pub params: Option<NbParams>,
    pub scoring_mode: ScoringMode,
    /// Cap on NB itemset size.
    pub max_size: Option<usize>,
    /// NB runs producing more itemsets than this are recorded as failures.
    pub max_itemsets: Option<usize>,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            runs: Vec::new(),
            params: None,
            scoring_mode: ScoringMode::Closure,
            max_size: None,
            max_itemsets: None,
            jobs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SweepPoint {
    /// Mined itemsets of size ≥ 2.
    pub mined_count: usize,
    pub max_size: usize,
    pub report: EvalReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepEntry {
    pub method: Method,
    pub parameter: f64,
    /// The error message when the run failed.
    pub outcome: std::result::Result<SweepPoint, String>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
}

fn run_point(
    db: &TransactionDatabase,
    positives: &HashSet<Itemset>,
    method: Method,
    parameter: f64,
    params: &std::result::Result<NbParams, String>,
    spec: &SweepSpec,
) -> std::result::Result<SweepPoint, String> {
    let mined: Vec<Itemset> = match method {
        Method::Nb { theta } => {
            let params = params.clone()?;
            let config = MinerConfig::new(params, parameter, theta)
                .map_err(|e| e.to_string())?
                .with_max_size(spec.max_size)
                .with_max_itemsets(spec.max_itemsets);
            nb_dfs(db, &config)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|m| m.items)
                .collect()
        }
        Method::MinSupport => mine_frequent(db, parameter)
            .map_err(|e| e.to_string())?
            .into_iter()
            .filter(|f| f.items.len() >= 2)
            .map(|f| f.items)
            .collect(),
        Method::AllConfidence => mine_allconf(db, parameter)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|f| f.items)
            .collect(),
    };
    Ok(SweepPoint {
        mined_count: mined.len(),
        max_size: mined.iter().map(Itemset::len).max().unwrap_or(0),
        report: score_against(&mined, positives),
    })
}

/// Runs every grid point and scores it. Failures are recorded per point;
/// output order follows `spec.runs` regardless of completion order.
pub fn sweep(db: &TransactionDatabase, truth: &GroundTruth, spec: &SweepSpec) -> Result<SweepResult> {
    let needs_model = spec.runs.iter().any(|(m, _)| matches!(m, Method::Nb { .. }));
    let params = match &spec.params {
        Some(p) => Ok(p.clone()),
        None if needs_model => fit_database(db, &FitOptions::default())
            .map(|r| r.params)
            .map_err(|e| format!("model fit failed: {e}")),
        None => Err("no model".to_string()),
    };
    let positives = positives(truth, spec.scoring_mode);
    let points: Vec<(Method, f64)> = spec
        .runs
        .iter()
        .flat_map(|(m, grid)| grid.iter().map(move |&p| (*m, p)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InfeasibleConfig(format!("thread pool: {e}")))?;
    let entries = pool.install(|| {
        points
            .par_iter()
            .map(|&(method, parameter)| SweepEntry {
                method,
                parameter,
                outcome: run_point(db, &positives, method, parameter, &params, spec),
            })
            .collect()
    });
    Ok(SweepResult { entries })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| x.to_string())
}

impl SweepResult {
    /// Tab-separated table with a header row. Failed points show `NA`.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(
            "method\tparameter\tmined_count\tmax_size\ttp\tfp\tpositives_total\tprecision\trecall\n",
        );
        for e in &self.entries {
            let _ = match &e.outcome {
                Ok(p) => writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    e.method.label(),
                    e.parameter,
                    p.mined_count,
                    p.max_size,
                    p.report.true_positives,
                    p.report.false_positives,
                    p.report.positives_total,
                    fmt_opt(p.report.precision),
                    fmt_opt(p.report.recall),
                ),
                Err(_) => writeln!(
                    out,
                    "{}\t{}\tNA\tNA\tNA\tNA\tNA\tNA\tNA",
                    e.method.label(),
                    e.parameter
                ),
            };
        }
        out
    }

    pub fn failures(&self) -> impl Iterator<Item = (&SweepEntry, &str)> {
        self.entries
            .iter()
            .filter_map(|e| e.outcome.as_ref().err().map(|m| (e, m.as_str())))
    }
}
