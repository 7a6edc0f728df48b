//! Transaction databases, basket-file I/O and conditional projection.
//!
//! A [`TransactionDatabase`] is a view over shared, immutable transaction
//! storage: the rows it selects plus cached item frequencies. Projecting onto
//! an itemset copies row indices only, never the transactions themselves.

use std::cell::RefCell;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::itemset::{Item, Itemset};

/// One basket: strictly increasing item ids.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Transaction(Vec<Item>);

impl Transaction {
    /// Sorts and collapses duplicate items.
    pub fn new(items: impl IntoIterator<Item = Item>) -> Self {
        let mut v: Vec<Item> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Transaction(v)
    }

    pub fn items(&self) -> &[Item] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<Item>> for Transaction {
    fn from(v: Vec<Item>) -> Self {
        Transaction::new(v)
    }
}

#[derive(Debug)]
struct Store {
    items: Vec<Item>,
    offsets: Vec<usize>,
    item_bound: usize,
}

impl Store {
    fn row(&self, r: u32) -> &[Item] {
        let r = r as usize;
        &self.items[self.offsets[r]..self.offsets[r + 1]]
    }
}

/// Immutable sequence of transactions with cached item frequencies.
#[derive(Clone, Debug)]
pub struct TransactionDatabase {
    store: Arc<Store>,
    rows: Vec<u32>,
    item_freq: Vec<(Item, u64)>,
    incidence_total: u64,
}

thread_local! {
    static COUNTER: RefCell<Vec<u32>> = const { RefCell::new(Vec::new()) };
}

impl TransactionDatabase {
    pub fn new(transactions: impl IntoIterator<Item = Transaction>) -> Self {
        let mut items = Vec::new();
        let mut offsets = vec![0];
        for t in transactions {
            items.extend_from_slice(&t.0);
            offsets.push(items.len());
        }
        let item_bound = items.iter().max().map_or(0, |&m| m as usize + 1);
        let store = Arc::new(Store {
            items,
            offsets,
            item_bound,
        });
        let rows: Vec<u32> = (0..store.offsets.len() as u32 - 1).collect();
        Self::with_rows(store, rows)
    }

    /// Convenience constructor from raw item lists (duplicates collapsed).
    pub fn from_baskets<I, T>(baskets: I) -> Self
    where
        I: IntoIterator<Item = T>,
        T: IntoIterator<Item = Item>,
    {
        Self::new(baskets.into_iter().map(Transaction::new))
    }

    fn with_rows(store: Arc<Store>, rows: Vec<u32>) -> Self {
        let (item_freq, incidence_total) = COUNTER.with(|cell| {
            let mut counter = cell.borrow_mut();
            if counter.len() < store.item_bound {
                counter.resize(store.item_bound, 0);
            }
            let mut touched = Vec::new();
            let mut incidences = 0u64;
            for &r in &rows {
                let row = store.row(r);
                incidences += row.len() as u64;
                for &i in row {
                    let slot = &mut counter[i as usize];
                    if *slot == 0 {
                        touched.push(i);
                    }
                    *slot += 1;
                }
            }
            touched.sort_unstable();
            let freq: Vec<(Item, u64)> = touched
                .into_iter()
                .map(|i| {
                    let c = std::mem::take(&mut counter[i as usize]);
                    (i, c as u64)
                })
                .collect();
            (freq, incidences)
        });
        TransactionDatabase {
            store,
            rows,
            item_freq,
            incidence_total,
        }
    }

    pub fn transaction_count(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Sum of transaction sizes.
    pub fn incidence_total(&self) -> u64 {
        self.incidence_total
    }

    /// `(item, frequency)` pairs for every item present, ascending by item.
    pub fn item_freq(&self) -> &[(Item, u64)] {
        &self.item_freq
    }

    pub fn item_frequency(&self, item: Item) -> u64 {
        self.item_freq
            .binary_search_by_key(&item, |&(i, _)| i)
            .map_or(0, |pos| self.item_freq[pos].1)
    }

    /// Number of distinct items that occur at least once.
    pub fn observed_items(&self) -> usize {
        self.item_freq.len()
    }

    pub fn transaction(&self, index: usize) -> &[Item] {
        self.store.row(self.rows[index])
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[Item]> + '_ {
        self.rows.iter().map(move |&r| self.store.row(r))
    }

    /// The first `n` transactions (or all of them).
    pub fn head(&self, n: usize) -> Self {
        let rows = self.rows[..n.min(self.rows.len())].to_vec();
        Self::with_rows(Arc::clone(&self.store), rows)
    }

    /// Number of transactions containing every item of `z`.
    pub fn freq(&self, z: &Itemset) -> u64 {
        if z.is_empty() {
            return self.rows.len() as u64;
        }
        if z.len() == 1 {
            return self.item_frequency(z.items()[0]);
        }
        self.iter().filter(|t| z.is_subset_of(t)).count() as u64
    }

    /// Fraction of transactions containing `z`.
    pub fn support(&self, z: &Itemset) -> Result<f64> {
        if self.rows.is_empty() {
            return Err(Error::EmptyDatabase);
        }
        Ok(self.freq(z) as f64 / self.rows.len() as f64)
    }

    /// Conditional database: the transactions that are supersets of `l`,
    /// in their original order.
    pub fn project(&self, l: &Itemset) -> Self {
        if l.is_empty() {
            return self.clone();
        }
        let rows = self
            .rows
            .iter()
            .copied()
            .filter(|&r| l.is_subset_of(self.store.row(r)))
            .collect();
        Self::with_rows(Arc::clone(&self.store), rows)
    }

    /// Projection onto a single additional item.
    pub fn project_item(&self, item: Item) -> Self {
        let rows = self
            .rows
            .iter()
            .copied()
            .filter(|&r| self.store.row(r).binary_search(&item).is_ok())
            .collect();
        Self::with_rows(Arc::clone(&self.store), rows)
    }

    /// Co-occurrence counts of every candidate item with `l`.
    ///
    /// `self` must be the conditional database of `l`; this is checked via
    /// the cached frequencies of `l`'s items.
    pub fn extension_counts(&self, l: &Itemset) -> Result<ExtensionCounts> {
        let n = self.rows.len() as u64;
        for &i in l.items() {
            if self.item_frequency(i) != n {
                let index = self
                    .iter()
                    .position(|t| t.binary_search(&i).is_err())
                    .unwrap_or(0);
                return Err(Error::NotConditional { index });
            }
        }
        let counts: Vec<(Item, u64)> = self
            .item_freq
            .iter()
            .copied()
            .filter(|&(i, _)| !l.contains(i))
            .collect();
        let rescale_sum = self.incidence_total - l.len() as u64 * n;
        debug_assert_eq!(rescale_sum, counts.iter().map(|&(_, c)| c).sum::<u64>());
        Ok(ExtensionCounts {
            base: l.clone(),
            counts,
            rescale_sum,
        })
    }

    /// Writes the database in basket format.
    pub fn write_basket<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for t in self.iter() {
            let mut first = true;
            for item in t {
                if !first {
                    w.write_all(b" ")?;
                }
                first = false;
                write!(w, "{item}")?;
            }
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn save_basket(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_basket(BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Co-occurrence counts for all 1-extensions of `base`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionCounts {
    pub base: Itemset,
    /// `(candidate, freq(base ∪ {candidate}))`, ascending by candidate;
    /// only candidates that co-occur at least once.
    pub counts: Vec<(Item, u64)>,
    /// Incidences in the conditional database excluding the base items.
    pub rescale_sum: u64,
}

impl ExtensionCounts {
    pub fn count(&self, item: Item) -> u64 {
        self.counts
            .binary_search_by_key(&item, |&(i, _)| i)
            .map_or(0, |pos| self.counts[pos].1)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Reads a basket file.
///
/// One transaction per line, item ids separated by spaces or tabs. Blank
/// lines and lines starting with `#` are skipped.
pub fn load_basket(path: impl AsRef<Path>) -> Result<TransactionDatabase> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_basket(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_basket<R: BufRead>(reader: R) -> Result<TransactionDatabase> {
    let mut transactions = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let items = trimmed
            .split_ascii_whitespace()
            .map(|tok| {
                tok.parse::<Item>().map_err(|_| Error::Parse {
                    line: idx + 1,
                    message: format!("invalid item id {tok:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        transactions.push(Transaction::new(items));
    }
    Ok(TransactionDatabase::new(transactions))
}
