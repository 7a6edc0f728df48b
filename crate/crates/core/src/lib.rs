//! Mining itemsets under a model-based frequency constraint.
//!
//! Item frequencies in transaction data are modelled as independent Poisson
//! processes whose rates follow a Gamma distribution, so the number of items
//! observed with frequency `r` is negative binomial. Rescaled to the
//! transactions containing an itemset `l`, the same model is a baseline for
//! the co-occurrence counts of all 1-extensions of `l`. Comparing observed
//! counts against that baseline yields a predicted precision for every
//! candidate frequency threshold, and a user-set precision threshold picks a
//! local threshold per itemset.
//!
//! Modules:
//!
//! - [`transactions`]: database, basket files, projection, extension counts.
//! - [`nb_model`]: negative binomial evaluation, EM fitting, goodness of fit.
//! - [`nb_mining`]: threshold selection and the depth-first miner.
//! - [`baselines`]: minimum support and all-confidence miners.
//! - [`synthgen`]: synthetic basket generator with ground truth.
//! - [`evaluation`]: precision/recall scoring and parameter sweeps.
//! - [`cli`]: the `nbfreq` command line.

pub mod baselines;
pub mod cli;
mod error;
pub mod evaluation;
pub mod itemset;
pub mod nb_mining;
pub mod nb_model;
pub(crate) mod portable;
pub mod synthgen;
pub mod transactions;

pub use error::{Error, Result};
pub use itemset::{Item, Itemset};
pub use nb_mining::{nb_dfs, MinedItemset, MinerConfig};
pub use nb_model::{FreqHistogram, NbParams};
pub use transactions::{ExtensionCounts, Transaction, TransactionDatabase};
