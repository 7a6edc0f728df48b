//! Test-only oracles, written independently of the library's algorithms.
//!
//! Everything here works on plain `Vec<Vec<u32>>` transactions and
//! recomputes counts by scanning, so a shared bug with the library would
//! have to be made twice.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

pub type Rows = Vec<Vec<u32>>;
pub type Set = BTreeSet<u32>;

/// Negative binomial probability straight from the gamma-function formula.
pub fn pmf(k: f64, a: f64, r: u64) -> f64 {
    let r = r as f64;
    (ln_gamma(k + r) - ln_gamma(r + 1.0) - ln_gamma(k) + r * (a / (1.0 + a)).ln()
        - k * (1.0 + a).ln())
    .exp()
}

/// `Pr[R >= rho]` as one minus the lower sum.
pub fn tail(k: f64, a: f64, rho: u64) -> f64 {
    let below: f64 = (0..rho).map(|r| pmf(k, a, r)).sum();
    (1.0 - below).max(0.0)
}

pub fn contains(t: &[u32], z: &Set) -> bool {
    z.iter().all(|i| t.contains(i))
}

pub fn freq(rows: &Rows, z: &Set) -> u64 {
    rows.iter().filter(|t| contains(t, z)).count() as u64
}

pub fn items_of(rows: &Rows) -> Set {
    rows.iter().flatten().copied().collect()
}

/// Every non-empty subset of `items`.
pub fn all_subsets(items: &Set) -> Vec<Set> {
    let v: Vec<u32> = items.iter().copied().collect();
    (1u64..(1 << v.len()))
        .map(|mask| {
            v.iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, &x)| x)
                .collect()
        })
        .collect()
}

/// Model constants an oracle run needs.
#[derive(Clone, Copy, Debug)]
pub struct Model {
    pub k: f64,
    pub a_per_incidence: f64,
    pub n_total: f64,
}

/// Local frequency threshold of `l` and the items it admits; `None` when
/// nothing passes.
pub fn select(rows: &Rows, l: &Set, m: Model, pi: f64) -> Option<(u64, Set)> {
    let cond: Vec<&Vec<u32>> = rows.iter().filter(|t| contains(t, l)).collect();
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut incidences = 0u64;
    for t in &cond {
        for i in t.iter().filter(|i| !l.contains(i)) {
            *counts.entry(*i).or_default() += 1;
            incidences += 1;
        }
    }
    if counts.is_empty() {
        return None;
    }
    let a_l = m.a_per_incidence * incidences as f64;
    let n = m.n_total - l.len() as f64;
    let r_max = *counts.values().max().unwrap();
    let mut best = None;
    for rho in (1..=r_max).rev() {
        let o = counts.values().filter(|&&c| c >= rho).count() as f64;
        let e = n * tail(m.k, a_l, rho);
        let precision = if o > 0.0 && o >= e { (o - e) / o } else { 0.0 };
        if precision >= pi {
            best = Some(rho);
        } else {
            break;
        }
    }
    best.map(|rho| {
        let chosen = counts.iter().filter(|(_, &c)| c >= rho).map(|(&i, _)| i).collect();
        (rho, chosen)
    })
}

/// NB-frequent itemsets of size ≥ 2, found level by level: a set is
/// accepted when at least `max(1, theta * size)` of its accepted
/// one-smaller subsets select the missing item. Singletons of observed
/// items are accepted by definition.
pub fn nb_frequent(rows: &Rows, m: Model, pi: f64, theta: f64) -> BTreeSet<Set> {
    let mut level: BTreeSet<Set> = items_of(rows).into_iter().map(|i| Set::from([i])).collect();
    let mut out = BTreeSet::new();
    while !level.is_empty() {
        let selections: BTreeMap<&Set, Set> = level
            .iter()
            .map(|l| (l, select(rows, l, m, pi).map(|(_, s)| s).unwrap_or_default()))
            .collect();
        let mut candidates = BTreeSet::new();
        for (l, sel) in &selections {
            for &c in sel {
                let mut bigger = (*l).clone();
                bigger.insert(c);
                candidates.insert(bigger);
            }
        }
        let mut next = BTreeSet::new();
        for cand in candidates {
            let generating = cand
                .iter()
                .filter(|&&j| {
                    let mut sub = cand.clone();
                    sub.remove(&j);
                    selections.get(&sub).is_some_and(|s| s.contains(&j))
                })
                .count() as f64;
            if generating >= 1.0 && generating >= theta * cand.len() as f64 {
                next.insert(cand);
            }
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    out
}

/// Itemsets (size ≥ 1) with `freq / |D| >= sigma`, by enumeration.
pub fn frequent(rows: &Rows, sigma: f64) -> BTreeMap<Set, u64> {
    let n = rows.len() as f64;
    all_subsets(&items_of(rows))
        .into_iter()
        .map(|z| {
            let f = freq(rows, &z);
            (z, f)
        })
        .filter(|&(_, f)| f as f64 / n >= sigma)
        .collect()
}

/// Smallest confidence over all rules `X -> z \ X` with non-empty `X`
/// strictly inside `z`.
pub fn all_confidence(rows: &Rows, z: &Set) -> f64 {
    let fz = freq(rows, z) as f64;
    all_subsets(z)
        .into_iter()
        .filter(|x| x.len() < z.len())
        .map(|x| fz / freq(rows, &x) as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Itemsets of size ≥ 2 with all-confidence `>= gamma`, by enumeration.
pub fn all_conf_sets(rows: &Rows, gamma: f64) -> BTreeSet<Set> {
    all_subsets(&items_of(rows))
        .into_iter()
        .filter(|z| z.len() >= 2 && all_confidence(rows, z) >= gamma)
        .collect()
}

/// Small random database over items `0..12` with a few planted groups, so
/// that both noise and real co-occurrence are present.
pub fn random_rows(seed: u64) -> Rows {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_items = rng.gen_range(5..=12u32);
    let n_rows = rng.gen_range(20..=60usize);
    let groups: Vec<Vec<u32>> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let size = rng.gen_range(2..=4usize).min(n_items as usize);
            let mut g: Vec<u32> = Vec::new();
            while g.len() < size {
                let i = rng.gen_range(0..n_items);
                if !g.contains(&i) {
                    g.push(i);
                }
            }
            g
        })
        .collect();
    let noise = rng.gen_range(0.05..0.25);
    (0..n_rows)
        .map(|_| {
            let mut t: Set = Set::new();
            for g in &groups {
                if rng.gen_bool(0.35) {
                    t.extend(g.iter().filter(|_| rng.gen_bool(0.85)));
                }
            }
            for i in 0..n_items {
                if rng.gen_bool(noise) {
                    t.insert(i);
                }
            }
            t.into_iter().collect()
        })
        .collect()
}

/// A fixed model for oracle runs: `k = 0.8`, `a` matching the mean item
/// frequency, every one of the `n_items` ids counted as available.
pub fn model_for(rows: &Rows, n_items: u32) -> Model {
    let incidences: usize = rows.iter().map(Vec::len).sum();
    let k = 0.8;
    let mean = incidences as f64 / n_items as f64;
    let a = mean / k;
    Model {
        k,
        a_per_incidence: a / incidences.max(1) as f64,
        n_total: n_items as f64,
    }
}

pub fn to_set(items: &[u32]) -> Set {
    items.iter().copied().collect()
}
