//! Reference miners: minimum support and all-confidence.
//!
//! Both constraints are downward closed, so both use the same level-wise
//! search over tid-lists: candidates of size `k + 1` are joined from
//! accepted `k`-itemsets sharing a prefix, and kept only when all their
//! `k`-subsets were accepted.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::itemset::{Item, Itemset};
use crate::transactions::TransactionDatabase;

#[derive(Clone, Debug, PartialEq)]
pub struct FrequentItemset {
    pub items: Itemset,
    pub freq: u64,
    pub support: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AllConfItemset {
    pub items: Itemset,
    pub freq: u64,
    pub all_confidence: f64,
}

type Level = Vec<(Itemset, Vec<u32>)>;

fn vertical(db: &TransactionDatabase) -> Level {
    let items = db.item_freq();
    let mut lists: Vec<Vec<u32>> = items.iter().map(|&(_, f)| Vec::with_capacity(f as usize)).collect();
    for (tid, t) in db.iter().enumerate() {
        for item in t {
            let pos = items
                .binary_search_by_key(item, |&(i, _)| i)
                .expect("item present in frequency table");
            lists[pos].push(tid as u32);
        }
    }
    items
        .iter()
        .zip(lists)
        .map(|(&(i, _), tids)| (Itemset::from_sorted(vec![i]), tids))
        .collect()
}

fn intersect(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Joins accepted `k`-itemsets into `(k+1)`-candidates whose `k`-subsets
/// are all accepted. `bound(candidate, max_possible_freq)` may reject a
/// candidate before its tid-list is computed; `keep(candidate, freq)` is the
/// constraint itself.
fn next_level(
    level: &Level,
    bound: impl Fn(&Itemset, u64) -> bool,
    keep: impl Fn(&Itemset, u64) -> bool,
) -> Level {
    let accepted: HashSet<&Itemset> = level.iter().map(|(s, _)| s).collect();
    let mut out = Vec::new();
    let mut start = 0;
    while start < level.len() {
        let prefix = &level[start].0.items()[..level[start].0.len() - 1];
        let mut end = start + 1;
        while end < level.len() && &level[end].0.items()[..level[end].0.len() - 1] == prefix {
            end += 1;
        }
        for i in start..end {
            for j in i + 1..end {
                let (left, lt) = &level[i];
                let (right, rt) = &level[j];
                let mut items = left.items().to_vec();
                items.push(*right.items().last().expect("non-empty"));
                let candidate = Itemset::from_sorted(items);
                let all_subsets_ok = candidate.len() <= 2
                    || candidate.items()[..candidate.len() - 2]
                        .iter()
                        .all(|&drop| accepted.contains(&candidate.without(drop)));
                if !all_subsets_ok || !bound(&candidate, lt.len().min(rt.len()) as u64) {
                    continue;
                }
                let tids = intersect(lt, rt);
                if !tids.is_empty() && keep(&candidate, tids.len() as u64) {
                    out.push((candidate, tids));
                }
            }
        }
        start = end;
    }
    out
}

/// All itemsets (size ≥ 1) with support `>= sigma`.
pub fn mine_frequent(db: &TransactionDatabase, sigma: f64) -> Result<Vec<FrequentItemset>> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(Error::invalid("sigma", sigma, "must be in (0, 1]"));
    }
    let n = db.transaction_count() as f64;
    if n == 0.0 {
        return Ok(Vec::new());
    }
    let passes = |freq: u64| freq as f64 / n >= sigma;
    let mut level: Level = vertical(db)
        .into_iter()
        .filter(|(_, t)| passes(t.len() as u64))
        .collect();
    let mut out = Vec::new();
    while !level.is_empty() {
        out.extend(level.iter().map(|(s, t)| FrequentItemset {
            items: s.clone(),
            freq: t.len() as u64,
            support: t.len() as f64 / n,
        }));
        level = next_level(&level, |_, bound| passes(bound), |_, f| passes(f));
    }
    Ok(out)
}

/// Minimum confidence over all rules from `z`: `freq(z) / max_i freq({i})`.
pub fn all_confidence(db: &TransactionDatabase, z: &Itemset) -> Result<f64> {
    if z.len() < 2 {
        return Err(Error::invalid("itemset size", z.len() as f64, "needs at least 2 items"));
    }
    let mut max_freq = 0;
    for &i in z.items() {
        let f = db.item_frequency(i);
        if f == 0 {
            return Err(Error::UnknownItem(i));
        }
        max_freq = max_freq.max(f);
    }
    Ok(db.freq(z) as f64 / max_freq as f64)
}

/// All itemsets of size ≥ 2 with all-confidence `>= gamma`.
pub fn mine_allconf(db: &TransactionDatabase, gamma: f64) -> Result<Vec<AllConfItemset>> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma", gamma, "must be in (0, 1]"));
    }
    let max_item_freq = |s: &Itemset| {
        s.items()
            .iter()
            .map(|&i| db.item_frequency(i))
            .max()
            .unwrap_or(0)
    };
    let passes = |s: &Itemset, freq: u64| freq as f64 / max_item_freq(s) as f64 >= gamma;
    let mut level = vertical(db);
    let mut out = Vec::new();
    loop {
        level = next_level(&level, passes, passes);
        if level.is_empty() {
            break;
        }
        out.extend(level.iter().map(|(s, t)| AllConfItemset {
            items: s.clone(),
            freq: t.len() as u64,
            all_confidence: t.len() as f64 / max_item_freq(s) as f64,
        }));
    }
    Ok(out)
}

/// `supp(antecedent ∪ {consequent}) / supp(antecedent)`.
pub fn confidence(db: &TransactionDatabase, antecedent: &Itemset, consequent: Item) -> Result<f64> {
    let base = db.freq(antecedent);
    if base == 0 {
        return Err(Error::ZeroSupport);
    }
    Ok(db.freq(&antecedent.with(consequent)) as f64 / base as f64)
}

impl FrequentItemset {
    /// Itemset line with the global frequency threshold and an empty
    /// precision column.
    pub fn to_line(&self, sigma_freq: u64) -> String {
        format!("{}\t{}\t{}\t", self.items, self.freq, sigma_freq)
    }
}

impl AllConfItemset {
    pub fn to_line(&self, gamma: f64) -> String {
        format!("{}\t{}\t{}\t", self.items, self.freq, gamma)
    }
}
