//! Mining NB-frequent itemsets.
//!
//! For an itemset `l`, the co-occurrence counts of all candidate items in the
//! conditional database `D_l` are compared with the negative binomial
//! baseline rescaled to `D_l`. The predicted precision of accepting every
//! candidate with count `>= rho` is `(o − e) / o`, where `o` and `e` are the
//! observed and expected numbers of such candidates. The local threshold is
//! the smallest `rho` reached from the top while precision stays `>= pi`.
//!
//! A `k`-itemset is NB-frequent when at least a fraction `theta` (and at
//! least one) of its `(k−1)`-subsets are NB-frequent and select the missing
//! item. The miner walks the lattice depth first from the empty set and
//! counts generating subsets in a global [`Repository`].

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::itemset::{Item, Itemset};
use crate::nb_model::{nb_tail, nb_tails, rescale_for_itemset, FreqHistogram, NbParams};
use crate::transactions::{ExtensionCounts, TransactionDatabase};

/// Predicted precision of accepting all candidates with count `>= rho`.
///
/// Returns 0 when nothing is observed at or above `rho` or when the model
/// expects more candidates there than were observed.
pub fn predicted_precision(
    o_hist: &FreqHistogram,
    n_candidates: f64,
    k: f64,
    a_l: f64,
    rho: u64,
) -> Result<f64> {
    if rho == 0 {
        return Err(Error::invalid("rho", 0.0, "must be at least 1"));
    }
    let observed = o_hist.count_at_least(rho) as f64;
    let expected = n_candidates.max(0.0) * nb_tail(k, a_l, rho)?;
    Ok(precision_of(observed, expected))
}

fn precision_of(observed: f64, expected: f64) -> f64 {
    if observed > 0.0 && observed >= expected {
        (observed - expected) / observed
    } else {
        0.0
    }
}

/// A local frequency threshold and the precision predicted for it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Threshold {
    pub sigma_freq: u64,
    pub precision: f64,
}

/// Smallest frequency threshold meeting `pi`, scanning down from the largest
/// observed count and stopping at the first count that fails.
///
/// `None` when even the largest observed count fails `pi`.
pub fn find_threshold(
    o_hist: &FreqHistogram,
    n_candidates: f64,
    k: f64,
    a_l: f64,
    pi: f64,
) -> Result<Option<Threshold>> {
    let Some(r_max) = o_hist.max_frequency() else {
        return Ok(None);
    };
    if r_max == 0 {
        return Ok(None);
    }
    let tails = nb_tails(k, a_l, r_max)?;
    let n = n_candidates.max(0.0);
    let mut found = None;
    let mut observed = 0u64;
    let mut classes = o_hist.iter().rev().peekable();
    for rho in (1..=r_max).rev() {
        while let Some(&(r, c)) = classes.peek() {
            if r < rho {
                break;
            }
            observed += c;
            classes.next();
        }
        let precision = precision_of(observed as f64, n * tails[rho as usize]);
        if precision >= pi {
            found = Some(Threshold {
                sigma_freq: rho,
                precision,
            });
        } else {
            break;
        }
    }
    Ok(found)
}

/// Outcome of candidate selection for one itemset.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub threshold: Option<Threshold>,
    /// Selected candidates, ascending.
    pub items: Vec<Item>,
    /// Rescaled model scale `a_l` used for the decision.
    pub a_l: f64,
}

/// Selects the candidate items whose co-occurrence with `counts.base` reaches
/// the local threshold at precision `pi`.
pub fn nb_select(counts: &ExtensionCounts, params: &NbParams, pi: f64) -> Result<Selection> {
    let a_l = rescale_for_itemset(params.a_per_incidence, counts.rescale_sum);
    if counts.is_empty() || counts.rescale_sum == 0 || a_l <= 0.0 {
        return Ok(Selection {
            threshold: None,
            items: Vec::new(),
            a_l,
        });
    }
    let o_hist = FreqHistogram::from_frequencies(counts.counts.iter().map(|&(_, c)| c));
    let n_candidates = params.n_total - counts.base.len() as f64;
    let threshold = find_threshold(&o_hist, n_candidates, params.k, a_l, pi)?;
    let items = match threshold {
        Some(t) => counts
            .counts
            .iter()
            .filter(|&&(_, c)| c >= t.sigma_freq)
            .map(|&(i, _)| i)
            .collect(),
        None => Vec::new(),
    };
    Ok(Selection {
        threshold,
        items,
        a_l,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RepoEntry {
    pub frequent: bool,
    /// NB-frequent subsets that generated this itemset so far.
    pub count: u32,
}

/// Global record of generated itemsets for one mining run.
#[derive(Clone, Debug, Default)]
pub struct Repository {
    entries: HashMap<Itemset, RepoEntry>,
}

impl Repository {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, itemset: &Itemset) -> Option<RepoEntry> {
        self.entries.get(itemset).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Registers `l ∪ {c}` for every selected `c` and returns those that just
/// became NB-frequent.
pub fn nb_gen(l: &Itemset, candidates: &[Item], theta: f64, repo: &mut Repository) -> Vec<Itemset> {
    let mut out = Vec::new();
    for &c in candidates {
        let extended = l.with(c);
        let size = extended.len() as f64;
        let entry = match repo.entries.entry(extended) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(v) => v.insert(RepoEntry::default()),
        };
        if entry.frequent {
            continue;
        }
        entry.count += 1;
        if (entry.count as f64) < theta * size {
            continue;
        }
        entry.frequent = true;
        out.push(l.with(c));
    }
    out
}

/// Parameters of a mining run.
#[derive(Clone, Debug)]
pub struct MinerConfig {
    /// Precision threshold, in `(0, 1]`.
    pub pi: f64,
    /// Required fraction of generating subsets, in `[0, 1]`.
    pub theta: f64,
    pub params: NbParams,
    /// Do not extend itemsets beyond this size.
    pub max_size: Option<usize>,
    /// Abort with [`Error::LimitExceeded`] once more itemsets are found.
    pub max_itemsets: Option<usize>,
}

impl MinerConfig {
    pub fn new(params: NbParams, pi: f64, theta: f64) -> Result<Self> {
        if !(pi > 0.0 && pi <= 1.0) {
            return Err(Error::invalid("pi", pi, "must be in (0, 1]"));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::invalid("theta", theta, "must be in [0, 1]"));
        }
        Ok(MinerConfig {
            pi,
            theta,
            params,
            max_size: None,
            max_itemsets: None,
        })
    }

    pub fn with_max_size(mut self, max_size: Option<usize>) -> Self {
        self.max_size = max_size;
        self
    }

    pub fn with_max_itemsets(mut self, limit: Option<usize>) -> Self {
        self.max_itemsets = limit;
        self
    }
}

/// An accepted itemset of size ≥ 2.
#[derive(Clone, Debug, PartialEq)]
pub struct MinedItemset {
    pub items: Itemset,
    pub freq: u64,
    /// Local threshold of the subset whose selection admitted this itemset.
    pub sigma_freq: u64,
    pub predicted_precision: f64,
}

impl MinedItemset {
    /// `items TAB freq TAB sigma_freq TAB predicted_precision`.
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.items, self.freq, self.sigma_freq, self.predicted_precision
        )
    }
}

struct Dfs<'a> {
    config: &'a MinerConfig,
    repo: Repository,
    found: Vec<MinedItemset>,
}

impl Dfs<'_> {
    fn expand(&mut self, l: &Itemset, db_l: &TransactionDatabase) -> Result<()> {
        let counts = db_l.extension_counts(l)?;
        let (candidates, threshold) = if l.is_empty() {
            (counts.counts.iter().map(|&(i, _)| i).collect(), None)
        } else {
            let sel = nb_select(&counts, &self.config.params, self.config.pi)?;
            (sel.items, sel.threshold)
        };
        drop(counts);
        let accepted = nb_gen(l, &candidates, self.config.theta, &mut self.repo);
        for next in accepted {
            let added = next
                .items()
                .iter()
                .copied()
                .find(|&i| !l.contains(i))
                .expect("1-extension adds one item");
            let db_next = db_l.project_item(added);
            if let Some(t) = threshold {
                self.found.push(MinedItemset {
                    items: next.clone(),
                    freq: db_next.transaction_count() as u64,
                    sigma_freq: t.sigma_freq,
                    predicted_precision: t.precision,
                });
                if let Some(limit) = self.config.max_itemsets {
                    if self.found.len() > limit {
                        return Err(Error::LimitExceeded { limit });
                    }
                }
            }
            if self.config.max_size.is_none_or(|m| next.len() < m) {
                self.expand(&next, &db_next)?;
            }
        }
        Ok(())
    }
}

/// Finds all NB-frequent itemsets of size ≥ 2, sorted by size and then
/// lexicographically.
pub fn nb_dfs(db: &TransactionDatabase, config: &MinerConfig) -> Result<Vec<MinedItemset>> {
    let mut dfs = Dfs {
        config,
        repo: Repository::new(),
        found: Vec::new(),
    };
    dfs.expand(&Itemset::empty(), db)?;
    let mut found = dfs.found;
    found.sort_by(|x, y| {
        x.items
            .len()
            .cmp(&y.items.len())
            .then_with(|| x.items.cmp(&y.items))
    });
    Ok(found)
}
