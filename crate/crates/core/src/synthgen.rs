//! Synthetic market-basket data with a known pattern set.
//!
//! Follows the classic Quest procedure. Every stochastic choice comes from
//! one `ChaCha8Rng` seeded with `config.seed`, in this order:
//!
//! 1. For each of the `n_patterns` patterns: size `max(1, Poisson(avg_pattern_size))`
//!    capped at `n_items`; a reuse fraction `min(1, Exp(mean = correlation))`;
//!    the reused items, picked from the previous pattern by partial shuffle;
//!    the remaining items, uniform over `0..n_items` with rejection of
//!    duplicates; then one `Exp(1)` weight.
//! 2. For each transaction: size `max(1, Poisson(avg_transaction_size))`, then
//!    pattern draws until the size is reached. A draw is one uniform for the
//!    weighted pick followed by corruption: while a uniform is below
//!    `corruption`, one uniform index picks an item to drop. A pattern that
//!    would overflow a non-empty transaction costs one more uniform: below
//!    0.5 it is added anyway, otherwise it is carried to the next
//!    transaction. Either way the transaction ends.
//!
//! Poisson and exponential variates use the crate's own `ln`/`exp`, so
//! output depends only on IEEE arithmetic and the seed.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::itemset::{Item, Itemset};
use crate::portable;
use crate::transactions::{Transaction, TransactionDatabase};

/// Pattern draws allowed per transaction before it is closed as is.
const MAX_DRAWS: usize = 1000;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GenConfig {
    pub n_transactions: usize,
    pub avg_transaction_size: f64,
    pub n_items: u32,
    pub n_patterns: usize,
    pub avg_pattern_size: f64,
    pub correlation: f64,
    pub corruption: f64,
    pub seed: u64,
}

impl GenConfig {
    /// 100,000 transactions of average size 10 over 1,000 items, 2,000
    /// patterns of average size 4.
    pub fn artif_1() -> Self {
        GenConfig {
            n_transactions: 100_000,
            avg_transaction_size: 10.0,
            n_items: 1000,
            n_patterns: 2000,
            avg_pattern_size: 4.0,
            correlation: 0.5,
            corruption: 0.5,
            seed: 1,
        }
    }

    /// As [`GenConfig::artif_1`] with 4,000 patterns of average size 2.
    pub fn artif_2() -> Self {
        GenConfig {
            n_patterns: 4000,
            avg_pattern_size: 2.0,
            ..Self::artif_1()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "artif-1" => Some(Self::artif_1()),
            "artif-2" => Some(Self::artif_2()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, v, "must be positive"))
            }
        };
        positive("n_transactions", self.n_transactions as f64)?;
        positive("avg_transaction_size", self.avg_transaction_size)?;
        positive("n_items", self.n_items as f64)?;
        positive("n_patterns", self.n_patterns as f64)?;
        positive("avg_pattern_size", self.avg_pattern_size)?;
        for (name, v) in [("correlation", self.correlation), ("corruption", self.corruption)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(name, v, "must be in [0, 1]"));
            }
        }
        if self.avg_pattern_size > self.n_items as f64 {
            return Err(Error::InfeasibleConfig(format!(
                "average pattern size {} exceeds the number of items {}",
                self.avg_pattern_size, self.n_items
            )));
        }
        // Knuth's Poisson method needs exp(-mean) > 0
        if self.avg_transaction_size > 700.0 || self.avg_pattern_size > 700.0 {
            return Err(Error::InfeasibleConfig("average sizes above 700 are not supported".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Pattern {
    pub items: Itemset,
    pub weight: f64,
}

/// The patterns used to generate a database, weights summing to 1.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GroundTruth {
    pub patterns: Vec<Pattern>,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for p in &self.patterns {
            writeln!(w, "{:?}\t{}", p.weight, p.items)?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write(BufWriter::new(file)).map_err(|e| Error::io(path, e))
    }

    /// Parses `weight TAB items` lines and re-normalizes the weights.
    pub fn read<R: BufRead>(reader: R) -> Result<Self> {
        let mut patterns = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::io("<reader>", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            let (w, items) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected weight and items separated by a tab".into()))?;
            let weight: f64 = w
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid weight {w:?}")))?;
            if !(weight >= 0.0 && weight.is_finite()) {
                return Err(bad(format!("invalid weight {w:?}")));
            }
            let items = items
                .split_ascii_whitespace()
                .map(|t| t.parse::<Item>().map_err(|_| bad(format!("invalid item id {t:?}"))))
                .collect::<Result<Itemset>>()?;
            if items.is_empty() {
                return Err(bad("pattern without items".into()));
            }
            patterns.push(Pattern { items, weight });
        }
        let total: f64 = patterns.iter().map(|p| p.weight).sum();
        if total > 0.0 {
            for p in &mut patterns {
                p.weight /= total;
            }
        }
        Ok(GroundTruth { patterns })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file))
    }
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u64 {
    let limit = portable::exp(-mean);
    let mut product = 1.0;
    let mut k = 0;
    loop {
        product *= rng.gen::<f64>();
        if product <= limit {
            return k;
        }
        k += 1;
    }
}

fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    let u: f64 = rng.gen();
    -mean * portable::ln(1.0 - u)
}

fn make_patterns(rng: &mut ChaCha8Rng, config: &GenConfig) -> Vec<Pattern> {
    let mut patterns: Vec<Pattern> = Vec::with_capacity(config.n_patterns);
    let mut prev: Vec<Item> = Vec::new();
    for _ in 0..config.n_patterns {
        let size = (poisson(rng, config.avg_pattern_size).max(1) as usize).min(config.n_items as usize);
        let fraction = exponential(rng, config.correlation).min(1.0);
        let reuse = ((fraction * size as f64).round() as usize).min(prev.len());
        let mut items: Vec<Item> = Vec::with_capacity(size);
        for j in 0..reuse {
            let pick = rng.gen_range(j..prev.len());
            prev.swap(j, pick);
            items.push(prev[j]);
        }
        while items.len() < size {
            let candidate = rng.gen_range(0..config.n_items);
            if !items.contains(&candidate) {
                items.push(candidate);
            }
        }
        let weight = exponential(rng, 1.0);
        prev = items.clone();
        patterns.push(Pattern {
            items: Itemset::from(items),
            weight,
        });
    }
    let total: f64 = patterns.iter().map(|p| p.weight).sum();
    for p in &mut patterns {
        p.weight /= total;
    }
    patterns
}

/// Generates a database and the patterns it was built from.
pub fn generate(config: &GenConfig) -> Result<(TransactionDatabase, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let patterns = make_patterns(&mut rng, config);

    let mut cumulative = Vec::with_capacity(patterns.len());
    let mut acc = 0.0;
    for p in &patterns {
        acc += p.weight;
        cumulative.push(acc);
    }

    let mut transactions = Vec::with_capacity(config.n_transactions);
    let mut carried: Option<Vec<Item>> = None;
    let mut current: Vec<Item> = Vec::new();
    for _ in 0..config.n_transactions {
        let size = poisson(&mut rng, config.avg_transaction_size).max(1) as usize;
        current.clear();
        for _ in 0..MAX_DRAWS {
            if current.len() >= size {
                break;
            }
            let drawn = match carried.take() {
                Some(items) => items,
                None => {
                    let u: f64 = rng.gen::<f64>() * acc;
                    let idx = cumulative.partition_point(|&c| c <= u).min(patterns.len() - 1);
                    let mut items = patterns[idx].items.items().to_vec();
                    while !items.is_empty() && rng.gen::<f64>() < config.corruption {
                        let drop = rng.gen_range(0..items.len());
                        items.remove(drop);
                    }
                    items
                }
            };
            if drawn.is_empty() {
                continue;
            }
            if !current.is_empty() && current.len() + drawn.len() > size {
                if rng.gen::<f64>() < 0.5 {
                    current.extend_from_slice(&drawn);
                } else {
                    carried = Some(drawn);
                }
                break;
            }
            current.extend_from_slice(&drawn);
            current.sort_unstable();
            current.dedup();
        }
        transactions.push(Transaction::new(current.iter().copied()));
    }
    Ok((TransactionDatabase::new(transactions), GroundTruth { patterns }))
}
