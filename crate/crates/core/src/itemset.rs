use std::fmt;

/// Item identifier.
pub type Item = u32;

/// A set of items, kept sorted and free of duplicates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Itemset(Vec<Item>);

impl Itemset {
    pub fn empty() -> Self {
        Itemset(Vec::new())
    }

    /// Builds an itemset from arbitrary items; sorts and removes duplicates.
    pub fn new(items: impl IntoIterator<Item = Item>) -> Self {
        let mut v: Vec<Item> = items.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Itemset(v)
    }

    /// Wraps a vector that is already strictly increasing.
    pub(crate) fn from_sorted(items: Vec<Item>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Itemset(items)
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

    pub fn contains(&self, item: Item) -> bool {
        self.0.binary_search(&item).is_ok()
    }

    /// The 1-extension `self ∪ {item}`.
    pub fn with(&self, item: Item) -> Itemset {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&item) {
            v.insert(pos, item);
        }
        Itemset(v)
    }

    pub fn without(&self, item: Item) -> Itemset {
        Itemset(self.0.iter().copied().filter(|&i| i != item).collect())
    }

    /// True when every item of `self` occurs in the sorted slice `sorted`.
    pub fn is_subset_of(&self, sorted: &[Item]) -> bool {
        if self.0.len() > sorted.len() {
            return false;
        }
        let mut rest = sorted;
        for &item in &self.0 {
            match rest.binary_search(&item) {
                Ok(pos) => rest = &rest[pos + 1..],
                Err(_) => return false,
            }
        }
        true
    }

    pub fn into_vec(self) -> Vec<Item> {
        self.0
    }
}

impl From<Vec<Item>> for Itemset {
    fn from(v: Vec<Item>) -> Self {
        Itemset::new(v)
    }
}

impl<const N: usize> From<[Item; N]> for Itemset {
    fn from(v: [Item; N]) -> Self {
        Itemset::new(v)
    }
}

impl FromIterator<Item> for Itemset {
    fn from_iter<T: IntoIterator<Item = Item>>(iter: T) -> Self {
        Itemset::new(iter)
    }
}

/// Space-separated ascending ids.
impl fmt::Display for Itemset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{item}")?;
        }
        Ok(())
    }
}
