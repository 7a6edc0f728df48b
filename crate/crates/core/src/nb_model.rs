//! Negative binomial (Gamma-Poisson) baseline model for item frequencies.
//!
//! With shape `k` and scale `a`,
//!
//! ```text
//! Pr[R = r] = (1 + a)^-k · Γ(k + r) / (Γ(r + 1) Γ(k)) · (a / (1 + a))^r
//! ```
//!
//! with mean `a·k` and variance `a·k·(1 + a)`. Parameters are estimated by
//! the method of moments; when the number of available items is unknown the
//! unobserved zero class is estimated jointly by EM. `a` scales linearly with
//! the amount of data, so it is also kept per incidence for rescaling to
//! conditional databases.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use statrs::function::gamma::{gamma_ur, ln_gamma};

use crate::error::{Error, Result};
use crate::transactions::TransactionDatabase;

fn check_shape_scale(k: f64, a: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid("k", k, "shape must be positive and finite"));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::invalid("a", a, "scale must be positive and finite"));
    }
    Ok(())
}

/// `ln(a / (1 + a))` without cancellation for large `a`.
fn ln_odds(a: f64) -> f64 {
    if a > 1.0 {
        -(1.0 / a).ln_1p()
    } else {
        a.ln() - a.ln_1p()
    }
}

/// `v · 2^e`, flushing to zero far below the subnormal range.
fn scale_pow2(v: f64, e: i32) -> f64 {
    if e < -1100 {
        return 0.0;
    }
    let half = e / 2;
    v * 2f64.powi(half) * 2f64.powi(e - half)
}

/// Log of the NB probability mass at `r`.
pub fn nb_ln_pmf(k: f64, a: f64, r: u64) -> Result<f64> {
    check_shape_scale(k, a)?;
    let base = -k * a.ln_1p();
    if r == 0 {
        return Ok(base);
    }
    let r = r as f64;
    Ok(base + ln_gamma(k + r) - ln_gamma(r + 1.0) - ln_gamma(k) + r * ln_odds(a))
}

/// NB probability mass at `r`, evaluated directly in log space.
pub fn nb_pmf(k: f64, a: f64, r: u64) -> Result<f64> {
    nb_ln_pmf(k, a, r).map(f64::exp)
}

/// Probabilities for `r = 0..=r_max` by the recursion
/// `Pr[R=r+1] = (k+r)/(r+1) · a/(1+a) · Pr[R=r]`, seeded with `(1+a)^-k`.
///
/// The running value carries a separate power-of-two exponent so that long
/// runs through tiny probabilities do not lose precision to underflow.
pub fn nb_pmf_prefix(k: f64, a: f64, r_max: u64) -> Result<Vec<f64>> {
    check_shape_scale(k, a)?;
    let q = a / (1.0 + a);
    let ln_p0 = -k * a.ln_1p();
    let (mut v, mut exp2) = if ln_p0 > -700.0 {
        (ln_p0.exp(), 0i32)
    } else {
        let e = (ln_p0 / std::f64::consts::LN_2).floor();
        ((ln_p0 - e * std::f64::consts::LN_2).exp(), e as i32)
    };
    let mut out = Vec::with_capacity(r_max as usize + 1);
    const BIG: f64 = 3.273_390_607_896_141_9e150; // 2^500
    for r in 0..=r_max {
        out.push(scale_pow2(v, exp2));
        if r == r_max {
            break;
        }
        let rf = r as f64;
        v *= (k + rf) * q / (rf + 1.0);
        if v < 1.0 / BIG {
            v *= BIG;
            exp2 -= 500;
        } else if v > BIG {
            v /= BIG;
            exp2 += 500;
        }
        if v == 0.0 {
            out.resize(r_max as usize + 1, 0.0);
            break;
        }
    }
    Ok(out)
}

/// `Pr[R >= rho]`.
pub fn nb_tail(k: f64, a: f64, rho: u64) -> Result<f64> {
    check_shape_scale(k, a)?;
    if rho == 0 {
        return Ok(1.0);
    }
    let mean = a * k;
    if (rho as f64) <= mean + 1.0 {
        let head = nb_pmf_prefix(k, a, rho - 1)?;
        let below: f64 = neumaier_sum(head.iter().copied());
        return Ok((1.0 - below).clamp(0.0, 1.0));
    }
    // Past the mean the terms decrease; sum upwards from rho.
    let q = a / (1.0 + a);
    let mut term = nb_pmf(k, a, rho)?;
    let mut sum = 0.0;
    let mut r = rho as f64;
    for _ in 0..100_000_000u64 {
        if term == 0.0 {
            break;
        }
        sum += term;
        term *= (k + r) * q / (r + 1.0);
        r += 1.0;
        if term <= sum * 1e-17 {
            break;
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// `Pr[R >= rho]` for every `rho` in `0..=r_max`.
pub fn nb_tails(k: f64, a: f64, r_max: u64) -> Result<Vec<f64>> {
    let pmf = nb_pmf_prefix(k, a, r_max)?;
    let mut tails = vec![0.0; r_max as usize + 1];
    let mut acc = nb_tail(k, a, r_max + 1)?;
    for r in (0..=r_max as usize).rev() {
        acc += pmf[r];
        tails[r] = acc.min(1.0);
    }
    Ok(tails)
}

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Method of moments: `k = mean² / (variance − mean)`, `a = mean / k`.
pub fn fit_moments(mean: f64, variance: f64) -> Result<(f64, f64)> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::invalid("mean", mean, "must be positive and finite"));
    }
    if !(variance > mean) || !variance.is_finite() {
        return Err(Error::Underdispersed { mean, variance });
    }
    let k = mean * mean / (variance - mean);
    Ok((k, mean / k))
}

/// Number of items observed with each frequency.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FreqHistogram {
    counts: BTreeMap<u64, u64>,
}

impl FreqHistogram {
    pub fn new() -> Self {
        Self::default()
    }

    /// One entry per item frequency.
    pub fn from_frequencies(freqs: impl IntoIterator<Item = u64>) -> Self {
        let mut h = Self::new();
        for f in freqs {
            h.add(f, 1);
        }
        h
    }

    /// `(frequency, number of items)` pairs; repeated classes accumulate.
    pub fn from_counts(counts: impl IntoIterator<Item = (u64, u64)>) -> Self {
        let mut h = Self::new();
        for (r, n) in counts {
            h.add(r, n);
        }
        h
    }

    pub fn from_database(db: &TransactionDatabase) -> Self {
        Self::from_frequencies(db.item_freq().iter().map(|&(_, f)| f))
    }

    pub fn add(&mut self, r: u64, n: u64) {
        if n > 0 {
            *self.counts.entry(r).or_insert(0) += n;
        }
    }

    pub fn count(&self, r: u64) -> u64 {
        self.counts.get(&r).copied().unwrap_or(0)
    }

    /// Items with frequency `>= rho`.
    pub fn count_at_least(&self, rho: u64) -> u64 {
        self.counts.range(rho..).map(|(_, &n)| n).sum()
    }

    /// Total number of items in the histogram.
    pub fn items(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn max_frequency(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    /// `(frequency, number of items)` ascending by frequency.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&r, &n)| (r, n))
    }

    /// Distinct classes with a positive frequency.
    pub fn positive_classes(&self) -> usize {
        self.counts.range(1..).count()
    }

    /// Mean and sample variance (`n − 1` denominator) of the frequencies,
    /// with `extra_zeros` additional items of frequency 0 mixed in.
    pub fn moments(&self, extra_zeros: f64) -> (f64, f64) {
        let n = self.items() as f64 + extra_zeros;
        if n <= 1.0 {
            return (f64::NAN, f64::NAN);
        }
        let s1: f64 = self.iter().map(|(r, c)| r as f64 * c as f64).sum();
        let mean = s1 / n;
        let ss: f64 = self
            .iter()
            .map(|(r, c)| {
                let d = r as f64 - mean;
                c as f64 * d * d
            })
            .sum::<f64>()
            + extra_zeros * mean * mean;
        (mean, ss / (n - 1.0))
    }
}

/// Removes `⌈fraction · items⌉` items, starting with the highest frequency.
pub fn trim_top(hist: &FreqHistogram, fraction: f64) -> Result<(FreqHistogram, u64)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::invalid("trim fraction", fraction, "must be in [0, 1)"));
    }
    let total = hist.items();
    // guard against products like 0.05·20 landing just above an integer
    let mut remaining = ((fraction * total as f64) - 1e-9).ceil().max(0.0) as u64;
    remaining = remaining.min(total);
    let removed = remaining;
    let mut out = hist.clone();
    while remaining > 0 {
        let (&r, &n) = out.counts.iter().next_back().expect("items left to trim");
        let take = n.min(remaining);
        if take == n {
            out.counts.remove(&r);
        } else {
            out.counts.insert(r, n - take);
        }
        remaining -= take;
    }
    Ok((out, removed))
}

/// Size of the data a histogram was taken from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SampleScale {
    pub incidence_total: u64,
    pub transaction_count: u64,
}

impl SampleScale {
    pub fn of(db: &TransactionDatabase) -> Self {
        SampleScale {
            incidence_total: db.incidence_total(),
            transaction_count: db.transaction_count() as u64,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct EmOptions {
    pub max_iter: u32,
    /// Stop once the zero-class estimate moves by less than this many items.
    pub tolerance: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        EmOptions {
            max_iter: 1000,
            tolerance: 0.5,
        }
    }
}

/// Fitted model.
#[derive(Clone, Debug, PartialEq)]
pub struct NbParams {
    pub k: f64,
    pub a: f64,
    /// `a / incidence_total`
    pub a_per_incidence: f64,
    /// Available items: observed plus the zero class.
    pub n_total: f64,
    pub incidence_total: u64,
    pub transaction_count: u64,
    pub em_iterations: u32,
    pub trimmed_items: u64,
}

impl NbParams {
    pub fn new(
        k: f64,
        a: f64,
        n_total: f64,
        incidence_total: u64,
        transaction_count: u64,
    ) -> Result<Self> {
        check_shape_scale(k, a)?;
        if !(n_total > 0.0 && n_total.is_finite()) {
            return Err(Error::invalid("n_total", n_total, "must be positive"));
        }
        if incidence_total == 0 {
            return Err(Error::invalid("incidence_total", 0.0, "must be positive"));
        }
        Ok(NbParams {
            k,
            a,
            a_per_incidence: a / incidence_total as f64,
            n_total,
            incidence_total,
            transaction_count,
            em_iterations: 0,
            trimmed_items: 0,
        })
    }

    pub fn mean(&self) -> f64 {
        self.a * self.k
    }

    pub fn variance(&self) -> f64 {
        self.a * self.k * (1.0 + self.a)
    }

    /// Serializes as `key = value` lines.
    pub fn to_model_string(&self) -> String {
        let mut s = String::from("# nbfreq negative binomial model\n");
        let _ = writeln!(s, "k = {}", fmt_decimal(self.k));
        let _ = writeln!(s, "a = {}", fmt_decimal(self.a));
        let _ = writeln!(s, "a_per_incidence = {}", fmt_decimal(self.a_per_incidence));
        let _ = writeln!(s, "n_total = {}", fmt_decimal(self.n_total));
        let _ = writeln!(s, "incidence_total = {}", self.incidence_total);
        let _ = writeln!(s, "transaction_count = {}", self.transaction_count);
        let _ = writeln!(s, "em_iterations = {}", self.em_iterations);
        let _ = writeln!(s, "trimmed_items = {}", self.trimmed_items);
        s
    }

    pub fn parse_model(text: &str) -> Result<Self> {
        let mut fields: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                message: "expected `key = value`".into(),
            })?;
            fields.insert(key.trim(), (idx + 1, value.trim()));
        }
        fn get<T: std::str::FromStr>(
            fields: &BTreeMap<&str, (usize, &str)>,
            key: &str,
        ) -> Result<T> {
            let (line, raw) = fields.get(key).ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing key `{key}`"),
            })?;
            raw.parse().map_err(|_| Error::Parse {
                line: *line,
                message: format!("invalid value for `{key}`: {raw:?}"),
            })
        }
        let mut p = NbParams::new(
            get(&fields, "k")?,
            get(&fields, "a")?,
            get(&fields, "n_total")?,
            get(&fields, "incidence_total")?,
            get(&fields, "transaction_count")?,
        )?;
        let stored: f64 = get(&fields, "a_per_incidence")?;
        if ((stored - p.a_per_incidence) / p.a_per_incidence).abs() > 1e-9 {
            return Err(Error::Parse {
                line: fields["a_per_incidence"].0,
                message: "a_per_incidence disagrees with a / incidence_total".into(),
            });
        }
        p.a_per_incidence = stored;
        p.em_iterations = get(&fields, "em_iterations")?;
        p.trimmed_items = get(&fields, "trimmed_items")?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_model_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_model(&text)
    }
}

/// Plain decimal with 17 significant digits; integers print without a
/// fractional part.
fn fmt_decimal(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        return format!("{v:.0}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (16 - mag).clamp(1, 340) as usize;
    format!("{v:.decimals$}")
}

/// Fits `(k, a)` and the number of available items.
///
/// With `n_known`, the zero class is `n_known − observed` and one moment fit
/// is done. Otherwise EM alternates between estimating the zero class as
/// `ñ · (1 + a)^-k` and refitting by moments on the zero-augmented data.
pub fn fit_em(hist: &FreqHistogram, n_known: Option<u64>, scale: SampleScale) -> Result<NbParams> {
    fit_em_with(hist, n_known, scale, &EmOptions::default())
}

pub fn fit_em_with(
    hist: &FreqHistogram,
    n_known: Option<u64>,
    scale: SampleScale,
    opts: &EmOptions,
) -> Result<NbParams> {
    if hist.positive_classes() < 2 {
        return Err(Error::DegenerateHistogram);
    }
    let observed = hist.items() as f64;
    if let Some(n) = n_known {
        if (n as f64) < observed {
            return Err(Error::invalid(
                "total items",
                n as f64,
                "smaller than the number of observed items",
            ));
        }
        let zeros = n as f64 - observed;
        let (mean, var) = hist.moments(zeros);
        let (k, a) = fit_moments(mean, var)?;
        return NbParams::new(k, a, n as f64, scale.incidence_total, scale.transaction_count);
    }

    let (mean, var) = hist.moments(0.0);
    let (mut k, mut a) = fit_moments(mean, var)?;
    let mut zeros = 0.0;
    for iteration in 1..=opts.max_iter {
        let next = (observed + zeros) * (-k * a.ln_1p()).exp();
        let (mean, var) = hist.moments(next);
        (k, a) = fit_moments(mean, var)?;
        let delta = (next - zeros).abs();
        zeros = next;
        if delta < opts.tolerance {
            let mut p = NbParams::new(
                k,
                a,
                observed + zeros.round(),
                scale.incidence_total,
                scale.transaction_count,
            )?;
            p.em_iterations = iteration;
            return Ok(p);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
    })
}

/// `a / incidence_total`.
pub fn rescale_per_incidence(params: &NbParams) -> Result<f64> {
    if params.incidence_total == 0 {
        return Err(Error::invalid("incidence_total", 0.0, "must be positive"));
    }
    Ok(params.a / params.incidence_total as f64)
}

/// Scale for a conditional database with `sample_incidences` candidate
/// incidences. Zero incidences give zero, i.e. no model support.
pub fn rescale_for_itemset(a_per_incidence: f64, sample_incidences: u64) -> f64 {
    a_per_incidence * sample_incidences as f64
}

/// Expected number of items with frequency `>= sigma_freq`.
pub fn expected_frequent_items(params: &NbParams, sigma_freq: u64) -> Result<f64> {
    Ok(params.n_total * nb_tail(params.k, params.a, sigma_freq)?)
}

/// One merged class of the goodness-of-fit test; `last = None` is the
/// open-ended tail class.
#[derive(Clone, Debug, PartialEq)]
pub struct GofClass {
    pub first: u64,
    pub last: Option<u64>,
    pub observed: f64,
    pub expected: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GofResult {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
    pub classes: Vec<GofClass>,
}

/// Chi-square goodness of fit of `hist` against the fitted model.
///
/// Items missing from the histogram up to `n_total` form the observed zero
/// class. Classes are merged upward from `r = 0` until each has an expected
/// count of at least 5; two degrees of freedom are charged for `k` and `a`.
pub fn gof_chi2(hist: &FreqHistogram, params: &NbParams) -> Result<GofResult> {
    if hist.is_empty() {
        return Err(Error::DegenerateHistogram);
    }
    let r_max = hist.max_frequency().unwrap_or(0) as usize;
    let mut observed = vec![0.0; r_max + 1];
    for (r, n) in hist.iter() {
        observed[r as usize] += n as f64;
    }
    observed[0] += (params.n_total - hist.items() as f64).max(0.0);
    gof_chi2_observed(&observed, params)
}

/// Same test on observed class counts indexed by frequency.
pub fn gof_chi2_observed(observed: &[f64], params: &NbParams) -> Result<GofResult> {
    check_shape_scale(params.k, params.a)?;
    let n = params.n_total;
    let q = params.a / (1.0 + params.a);
    let obs_at = |r: usize| observed.get(r).copied().unwrap_or(0.0);
    let obs_from = |r: usize| observed.iter().skip(r).sum::<f64>();

    let mut classes: Vec<GofClass> = Vec::new();
    let mut pmf = (-params.k * params.a.ln_1p()).exp();
    let mut cdf = 0.0;
    let (mut start, mut acc_o, mut acc_e) = (0usize, 0.0, 0.0);
    let mut r = 0usize;
    loop {
        acc_e += n * pmf;
        acc_o += obs_at(r);
        cdf += pmf;
        let rest = n * (1.0 - cdf).max(0.0);
        if rest < 5.0 || r > 50_000_000 {
            let mut tail = GofClass {
                first: start as u64,
                last: None,
                observed: acc_o + obs_from(r + 1),
                expected: acc_e + rest,
            };
            // a short tail joins the class before it
            if tail.expected < 5.0 {
                if let Some(prev) = classes.pop() {
                    tail.first = prev.first;
                    tail.observed += prev.observed;
                    tail.expected += prev.expected;
                }
            }
            classes.push(tail);
            break;
        }
        if acc_e >= 5.0 {
            classes.push(GofClass {
                first: start as u64,
                last: Some(r as u64),
                observed: acc_o,
                expected: acc_e,
            });
            start = r + 1;
            acc_o = 0.0;
            acc_e = 0.0;
        }
        pmf *= (params.k + r as f64) * q / (r as f64 + 1.0);
        r += 1;
    }
    if classes.len() < 4 {
        return Err(Error::TooFewClasses {
            classes: classes.len(),
        });
    }
    let chi2: f64 = classes
        .iter()
        .map(|c| (c.observed - c.expected).powi(2) / c.expected)
        .sum();
    let df = classes.len() - 3;
    let p_value = if chi2 <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, chi2 / 2.0)
    };
    Ok(GofResult {
        chi2,
        df,
        p_value,
        classes,
    })
}

/// Options for [`fit_database`].
#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Fraction of most frequent items left out of the fit.
    pub trim: f64,
    /// Number of available items, if known; otherwise estimated by EM.
    pub total_items: Option<u64>,
    pub em: EmOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            trim: 0.025,
            total_items: None,
            em: EmOptions::default(),
        }
    }
}

#[derive(Debug)]
pub struct FitReport {
    pub params: NbParams,
    /// The histogram after trimming, as used for fitting.
    pub histogram: FreqHistogram,
    pub gof: Result<GofResult>,
}

/// Histogram, trim, fit and test in one go.
///
/// `a_per_incidence` uses the incidence total of the whole database.
/// A known item total counts trimmed items too; they are subtracted before
/// fitting.
pub fn fit_database(db: &TransactionDatabase, opts: &FitOptions) -> Result<FitReport> {
    let hist = FreqHistogram::from_database(db);
    let (trimmed, removed) = trim_top(&hist, opts.trim)?;
    let n_known = match opts.total_items {
        Some(n) if n < hist.items() => {
            return Err(Error::invalid(
                "total items",
                n as f64,
                "smaller than the number of observed items",
            ))
        }
        Some(n) => Some(n - removed),
        None => None,
    };
    let mut params = fit_em_with(&trimmed, n_known, SampleScale::of(db), &opts.em)?;
    params.trimmed_items = removed;
    let gof = gof_chi2(&trimmed, &params);
    Ok(FitReport {
        params,
        histogram: trimmed,
        gof,
    })
}
