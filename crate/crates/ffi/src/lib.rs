//! C interface to `nbfreq`.
//!
//! Objects are opaque handles created by `nbf_*_load`/`nbf_*_fit`/`nbf_mine`
//! and released with the matching `nbf_*_free`. Every fallible call returns
//! an [`NbfStatus`]; on failure, [`nbf_last_error_message`] describes the
//! error for the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nbfreq::nb_model::{fit_database, FitOptions};
use nbfreq::transactions::load_basket;
use nbfreq::{nb_dfs, Error, MinedItemset, MinerConfig, NbParams, Transaction, TransactionDatabase};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NbfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// The model could not be fitted to the data.
    FitFailed = 5,
    LimitExceeded = 6,
    /// A bug: the library panicked.
    Internal = 7,
}

/// A transaction database.
pub struct NbfDatabase {
    db: TransactionDatabase,
}

/// A fitted frequency model.
pub struct NbfModel {
    params: NbParams,
}

/// Mined itemsets, sorted by size and then lexicographically.
pub struct NbfItemsets {
    sets: Vec<MinedItemset>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> NbfStatus {
    match err {
        Error::Io { .. } => NbfStatus::Io,
        Error::Parse { .. } => NbfStatus::Parse,
        Error::Underdispersed { .. }
        | Error::DegenerateHistogram
        | Error::NonConvergence { .. }
        | Error::TooFewClasses { .. }
        | Error::EmptyDatabase => NbfStatus::FitFailed,
        Error::LimitExceeded { .. } => NbfStatus::LimitExceeded,
        _ => NbfStatus::InvalidArgument,
    }
}

fn fail(status: NbfStatus, msg: &str) -> NbfStatus {
    set_error(msg);
    status
}

/// Runs `body`, turning library errors and panics into status codes.
fn guard(body: impl FnOnce() -> Result<(), NbfStatus>) -> NbfStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            NbfStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(NbfStatus::Internal, "internal error (panic)"),
    }
}

fn lib<T>(r: nbfreq::Result<T>) -> Result<T, NbfStatus> {
    r.map_err(|e| fail(status_of(&e), &e.to_string()))
}

unsafe fn path_arg<'a>(path: *const c_char) -> Result<&'a str, NbfStatus> {
    if path.is_null() {
        return Err(fail(NbfStatus::NullPointer, "path is null"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map_err(|_| fail(NbfStatus::InvalidArgument, "path is not valid UTF-8"))
}

unsafe fn out_arg<'a, T>(out: *mut *mut T) -> Result<&'a mut *mut T, NbfStatus> {
    out.as_mut()
        .ok_or_else(|| fail(NbfStatus::NullPointer, "output pointer is null"))
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, NbfStatus> {
    h.as_ref()
        .ok_or_else(|| fail(NbfStatus::NullPointer, &format!("{what} is null")))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `nbf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn nbf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a basket file (one transaction per line, item ids separated by
/// whitespace).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nbf_database_load(path: *const c_char, out: *mut *mut NbfDatabase) -> NbfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let db = lib(load_basket(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(NbfDatabase { db }));
        Ok(())
    })
}

/// Builds a database from a flat item array: transaction `t` holds
/// `items[offsets[t] .. offsets[t + 1]]`, so `offsets` has
/// `n_transactions + 1` entries.
///
/// # Safety
/// `offsets` must point to `n_transactions + 1` values and `items` to at
/// least `offsets[n_transactions]` values.
#[no_mangle]
pub unsafe extern "C" fn nbf_database_from_arrays(
    items: *const u32,
    offsets: *const usize,
    n_transactions: usize,
    out: *mut *mut NbfDatabase,
) -> NbfStatus {
    guard(|| {
        let out = out_arg(out)?;
        if offsets.is_null() {
            return Err(fail(NbfStatus::NullPointer, "offsets is null"));
        }
        let offsets = std::slice::from_raw_parts(offsets, n_transactions + 1);
        if offsets.windows(2).any(|w| w[1] < w[0]) {
            return Err(fail(NbfStatus::InvalidArgument, "offsets must be non-decreasing"));
        }
        let total = offsets[n_transactions];
        let items: &[u32] = if total == 0 {
            &[]
        } else if items.is_null() {
            return Err(fail(NbfStatus::NullPointer, "items is null"));
        } else {
            std::slice::from_raw_parts(items, total)
        };
        let db = TransactionDatabase::new(
            offsets
                .windows(2)
                .map(|w| Transaction::new(items[w[0]..w[1]].iter().copied())),
        );
        *out = Box::into_raw(Box::new(NbfDatabase { db }));
        Ok(())
    })
}

/// Number of transactions; 0 for a null handle.
///
/// # Safety
/// `db` must be null or a live database handle.
#[no_mangle]
pub unsafe extern "C" fn nbf_database_transaction_count(db: *const NbfDatabase) -> usize {
    db.as_ref().map_or(0, |d| d.db.transaction_count())
}

/// # Safety
/// `db` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nbf_database_free(db: *mut NbfDatabase) {
    if !db.is_null() {
        drop(Box::from_raw(db));
    }
}

/// Fits the model. `trim` is the fraction of most frequent items left out;
/// a negative `total_items` means the number of available items is unknown
/// and is estimated.
///
/// # Safety
/// `db` must be a live database handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nbf_model_fit(
    db: *const NbfDatabase,
    trim: f64,
    total_items: i64,
    out: *mut *mut NbfModel,
) -> NbfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let db = handle(db, "database")?;
        let opts = FitOptions {
            trim,
            total_items: u64::try_from(total_items).ok(),
            ..FitOptions::default()
        };
        let report = lib(fit_database(&db.db, &opts))?;
        *out = Box::into_raw(Box::new(NbfModel { params: report.params }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nbf_model_load(path: *const c_char, out: *mut *mut NbfModel) -> NbfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let params = lib(NbParams::load(path_arg(path)?))?;
        *out = Box::into_raw(Box::new(NbfModel { params }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live model handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nbf_model_save(model: *const NbfModel, path: *const c_char) -> NbfStatus {
    guard(|| {
        let model = handle(model, "model")?;
        lib(model.params.save(path_arg(path)?))
    })
}

/// Shape parameter; NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn nbf_model_k(model: *const NbfModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.params.k)
}

/// Scale parameter; NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn nbf_model_a(model: *const NbfModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.params.a)
}

/// Estimated number of available items; NaN for a null handle.
///
/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn nbf_model_n_total(model: *const NbfModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.params.n_total)
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nbf_model_free(model: *mut NbfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Mines itemsets of size ≥ 2 at precision threshold `pi` and subset
/// fraction `theta`. `max_size` of 0 means unbounded.
///
/// # Safety
/// `db` and `model` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nbf_mine(
    db: *const NbfDatabase,
    model: *const NbfModel,
    pi: f64,
    theta: f64,
    max_size: usize,
    out: *mut *mut NbfItemsets,
) -> NbfStatus {
    guard(|| {
        let out = out_arg(out)?;
        let db = handle(db, "database")?;
        let model = handle(model, "model")?;
        let cfg = lib(MinerConfig::new(model.params.clone(), pi, theta))?
            .with_max_size((max_size > 0).then_some(max_size));
        let sets = lib(nb_dfs(&db.db, &cfg))?;
        *out = Box::into_raw(Box::new(NbfItemsets { sets }));
        Ok(())
    })
}

/// Number of itemsets; 0 for a null handle.
///
/// # Safety
/// `sets` must be null or a live itemsets handle.
#[no_mangle]
pub unsafe extern "C" fn nbf_itemsets_count(sets: *const NbfItemsets) -> usize {
    sets.as_ref().map_or(0, |s| s.sets.len())
}

/// Reads itemset `index`. `items` receives a pointer to `len` ascending
/// item ids, owned by `sets`. Any of the output pointers may be null.
///
/// # Safety
/// `sets` must be a live itemsets handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nbf_itemsets_get(
    sets: *const NbfItemsets,
    index: usize,
    items: *mut *const u32,
    len: *mut usize,
    freq: *mut u64,
    sigma_freq: *mut u64,
    precision: *mut f64,
) -> NbfStatus {
    guard(|| {
        let sets = handle(sets, "itemsets")?;
        let m = sets.sets.get(index).ok_or_else(|| {
            fail(
                NbfStatus::InvalidArgument,
                &format!("index {index} out of range ({} itemsets)", sets.sets.len()),
            )
        })?;
        if let Some(p) = items.as_mut() {
            *p = m.items.items().as_ptr();
        }
        if let Some(p) = len.as_mut() {
            *p = m.items.len();
        }
        if let Some(p) = freq.as_mut() {
            *p = m.freq;
        }
        if let Some(p) = sigma_freq.as_mut() {
            *p = m.sigma_freq;
        }
        if let Some(p) = precision.as_mut() {
            *p = m.predicted_precision;
        }
        Ok(())
    })
}

/// # Safety
/// `sets` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nbf_itemsets_free(sets: *mut NbfItemsets) {
    if !sets.is_null() {
        drop(Box::from_raw(sets));
    }
}
