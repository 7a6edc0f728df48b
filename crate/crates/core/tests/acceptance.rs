//! Acceptance checks. Runs as a plain binary (no libtest harness) so the
//! PASS/FAIL line of every criterion is always printed; exits non-zero if
//! any criterion fails.

mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use nbfreq::baselines::{confidence, mine_allconf, mine_frequent};
use nbfreq::evaluation::{score, ScoringMode};
use nbfreq::nb_mining::{find_threshold, nb_select, predicted_precision};
use nbfreq::nb_model::{fit_database, fit_moments, nb_pmf, nb_pmf_prefix, FitOptions};
use nbfreq::synthgen::{generate, GenConfig, GroundTruth};
use nbfreq::{nb_dfs, FreqHistogram, Itemset, MinedItemset, MinerConfig, NbParams, TransactionDatabase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{Rows, Set};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed <= budget, || format!("took {elapsed:?}, budget {budget:?}"))
}

// ---------------------------------------------------------------- shared data

const THETAS: [f64; 3] = [0.0, 0.5, 1.0];
const PIS: [f64; 3] = [0.5, 0.9, 0.99];
const SMALL_DBS: u64 = 100;
const SMALL_ITEMS: u32 = 12;

struct SmallRun {
    rows: Rows,
    db: TransactionDatabase,
    params: NbParams,
    /// `(theta index, pi index)` -> emitted itemsets
    mined: BTreeMap<(usize, usize), Vec<MinedItemset>>,
}

fn small_runs() -> Result<Vec<SmallRun>, String> {
    let mut out = Vec::new();
    for seed in 0..SMALL_DBS {
        let rows = support::random_rows(seed);
        let db = TransactionDatabase::from_baskets(rows.clone());
        let m = support::model_for(&rows, SMALL_ITEMS);
        let params = NbParams::new(
            m.k,
            m.a_per_incidence * db.incidence_total() as f64,
            m.n_total,
            db.incidence_total(),
            db.transaction_count() as u64,
        )
        .map_err(|e| format!("db {seed}: {e}"))?;
        let mut mined = BTreeMap::new();
        for (ti, &theta) in THETAS.iter().enumerate() {
            for (pj, &pi) in PIS.iter().enumerate() {
                let cfg = MinerConfig::new(params.clone(), pi, theta).map_err(|e| e.to_string())?;
                let found = nb_dfs(&db, &cfg).map_err(|e| format!("db {seed}: {e}"))?;
                mined.insert((ti, pj), found);
            }
        }
        out.push(SmallRun {
            rows,
            db,
            params,
            mined,
        });
    }
    Ok(out)
}

fn as_sets(found: &[MinedItemset]) -> BTreeSet<Set> {
    found.iter().map(|m| support::to_set(m.items.items())).collect()
}

struct Artif2 {
    db: TransactionDatabase,
    truth: GroundTruth,
    params: NbParams,
    mined: Vec<MinedItemset>,
}

fn artif2() -> Result<Artif2, String> {
    let config = GenConfig {
        n_transactions: 20_000,
        ..GenConfig::artif_2()
    };
    let (db, truth) = generate(&config).map_err(|e| e.to_string())?;
    let params = fit_database(&db, &FitOptions::default())
        .map_err(|e| e.to_string())?
        .params;
    let cfg = MinerConfig::new(params.clone(), 0.95, 0.5).map_err(|e| e.to_string())?;
    let mined = nb_dfs(&db, &cfg).map_err(|e| e.to_string())?;
    Ok(Artif2 {
        db,
        truth,
        params,
        mined,
    })
}

// ------------------------------------------------------------------ criteria

fn worked_example() -> Outcome {
    let clock = Instant::now();
    let hist = FreqHistogram::from_counts([
        (1, 81),
        (2, 48),
        (3, 13),
        (4, 6),
        (6, 1),
        (8, 1),
        (11, 2),
        (12, 1),
        (13, 1),
        (14, 1),
        (18, 1),
    ]);
    let p10 = predicted_precision(&hist, 339.0, 0.844, 1.164, 10).map_err(|e| e.to_string())?;
    let p11 = predicted_precision(&hist, 339.0, 0.844, 1.164, 11).map_err(|e| e.to_string())?;
    let t = find_threshold(&hist, 339.0, 0.844, 1.164, 0.95).map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();
    ensure((p10 - 0.92108).abs() <= 5e-5, || format!("precision(10) = {p10}"))?;
    ensure((p11 - 0.95811).abs() <= 5e-5, || format!("precision(11) = {p11}"))?;
    ensure(t.map(|t| t.sigma_freq) == Some(11), || format!("threshold {t:?}"))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("precision(10)={p10:.5} precision(11)={p11:.5} sigma=11 in {elapsed:?}"))
}

fn moments_fit() -> Outcome {
    let clock = Instant::now();
    let (k, a) = fit_moments(99.711, 11_879.543).map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();
    ensure((k - 0.844).abs() <= 0.001, || format!("k = {k}"))?;
    ensure((a - 118.14).abs() <= 0.05, || format!("a = {a}"))?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("k={k:.4} a={a:.3}"))
}

fn recursion_vs_direct() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut compared = 0u64;
    for _ in 0..200 {
        // log-uniform shapes and scales covering the fitted ranges
        let k = 10f64.powf(rng.gen_range(-1.5..1.5));
        let a = 10f64.powf(rng.gen_range(-1.0..2.5));
        let prefix = nb_pmf_prefix(k, a, 10_000).map_err(|e| e.to_string())?;
        for (r, &rec) in prefix.iter().enumerate() {
            let direct = nb_pmf(k, a, r as u64).map_err(|e| e.to_string())?;
            if direct < f64::MIN_POSITIVE && rec < f64::MIN_POSITIVE {
                // below the normal range only absolute agreement is meaningful
                continue;
            }
            let dev = ((rec - direct) / direct).abs();
            worst = worst.max(dev);
            compared += 1;
        }
    }
    let elapsed = clock.elapsed();
    ensure(worst <= 1e-9, || format!("max relative deviation {worst:e}"))?;
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!("max relative deviation {worst:.2e} over {compared} values"))
}

fn miner_oracle(runs: &[SmallRun], elapsed: Duration) -> Outcome {
    let clock = Instant::now();
    let mut emitted = 0usize;
    for (seed, run) in runs.iter().enumerate() {
        let m = support::Model {
            k: run.params.k,
            a_per_incidence: run.params.a_per_incidence,
            n_total: run.params.n_total,
        };
        for (ti, &theta) in THETAS.iter().enumerate() {
            for (pj, &pi) in PIS.iter().enumerate() {
                let got = as_sets(&run.mined[&(ti, pj)]);
                let want = support::nb_frequent(&run.rows, m, pi, theta);
                ensure(got == want, || {
                    format!(
                        "db {seed}, theta {theta}, pi {pi}: only miner {:?}, only oracle {:?}",
                        got.difference(&want).collect::<Vec<_>>(),
                        want.difference(&got).collect::<Vec<_>>()
                    )
                })?;
                emitted += got.len();
            }
        }
    }
    ensure(emitted > 0, || "no itemsets emitted at all".into())?;
    let total = elapsed + clock.elapsed();
    within(total, Duration::from_secs(60))?;
    Ok(format!("{} databases x 9 settings agree, {emitted} itemsets", runs.len()))
}

fn baseline_oracles(runs: &[SmallRun]) -> Outcome {
    let clock = Instant::now();
    let (mut fsets, mut asets) = (0usize, 0usize);
    for (seed, run) in runs.iter().enumerate() {
        for sigma in [0.05, 0.1, 0.2, 0.4] {
            let got: BTreeMap<Set, u64> = mine_frequent(&run.db, sigma)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|f| (support::to_set(f.items.items()), f.freq))
                .collect();
            let want = support::frequent(&run.rows, sigma);
            ensure(got == want, || format!("db {seed}: min-support {sigma} differs"))?;
            fsets += got.len();
        }
        for gamma in [0.1, 0.3, 0.5, 0.8] {
            let got: BTreeSet<Set> = mine_allconf(&run.db, gamma)
                .map_err(|e| e.to_string())?
                .into_iter()
                .map(|f| support::to_set(f.items.items()))
                .collect();
            let want = support::all_conf_sets(&run.rows, gamma);
            ensure(got == want, || format!("db {seed}: all-confidence {gamma} differs"))?;
            asets += got.len();
        }
    }
    let elapsed = clock.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("{fsets} frequent and {asets} all-confidence itemsets match"))
}

fn confidence_equivalence(runs: &[SmallRun]) -> Outcome {
    let mut checked = 0usize;
    for (seed, run) in runs.iter().enumerate() {
        let n = run.db.transaction_count() as f64;
        let mut bases: BTreeSet<Itemset> = BTreeSet::new();
        for found in run.mined.values() {
            bases.extend(found.iter().map(|m| m.items.clone()));
        }
        for &pi in &PIS {
            for l in &bases {
                let cond = run.db.project(l);
                let counts = cond.extension_counts(l).map_err(|e| e.to_string())?;
                let sel = nb_select(&counts, &run.params, pi).map_err(|e| e.to_string())?;
                let Some(t) = sel.threshold else { continue };
                // sigma_l / supp(l) written over frequencies, where both
                // comparisons below are exact
                let freq_l = run.db.freq(l) as f64;
                let sigma_l = t.sigma_freq as f64 / n;
                let gamma = t.sigma_freq as f64 / freq_l;
                let mut by_support = BTreeSet::new();
                let mut by_conf = BTreeSet::new();
                for &(c, _) in run.db.item_freq() {
                    if l.contains(c) {
                        continue;
                    }
                    if run.db.support(&l.with(c)).map_err(|e| e.to_string())? >= sigma_l {
                        by_support.insert(c);
                    }
                    if confidence(&run.db, l, c).map_err(|e| e.to_string())? >= gamma {
                        by_conf.insert(c);
                    }
                }
                let selected: BTreeSet<_> = sel.items.iter().copied().collect();
                ensure(by_support == by_conf && by_conf == selected, || {
                    format!(
                        "db {seed}, l = {l}: support {by_support:?}, confidence {by_conf:?}, selected {selected:?}"
                    )
                })?;
                checked += 1;
            }
        }
    }
    ensure(checked > 0, || "no thresholds to compare".into())?;
    Ok(format!("{checked} local thresholds admit identical sets"))
}

fn actual_precision(run: &Artif2, elapsed: Duration) -> Outcome {
    let items: Vec<Itemset> = run.mined.iter().map(|m| m.items.clone()).collect();
    let report = score(&items, &run.truth, ScoringMode::Closure);
    let precision = report.precision.unwrap_or(0.0);
    ensure((0.88..=1.0).contains(&precision), || {
        format!("precision {precision} (tp {}, fp {})", report.true_positives, report.false_positives)
    })?;
    within(elapsed, Duration::from_secs(120))?;
    Ok(format!(
        "precision {precision:.4} recall {:.4} over {} itemsets",
        report.recall.unwrap_or(0.0),
        items.len()
    ))
}

fn dominance(run: &Artif2) -> Outcome {
    let mut nb_points = Vec::new();
    for pi in [0.999, 0.99, 0.95, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1] {
        let cfg = MinerConfig::new(run.params.clone(), pi, 0.5).map_err(|e| e.to_string())?;
        let items: Vec<Itemset> = nb_dfs(&run.db, &cfg)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|m| m.items)
            .collect();
        let r = score(&items, &run.truth, ScoringMode::Closure);
        nb_points.push((r.recall.unwrap_or(0.0), r.precision.unwrap_or(0.0)));
    }
    let mut ms_points = Vec::new();
    for sigma in [0.01, 0.005, 0.004, 0.003, 0.002, 0.0015, 0.0013, 0.001, 0.0007, 0.0005] {
        let items: Vec<Itemset> = mine_frequent(&run.db, sigma)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|f| f.items)
            .collect();
        let r = score(&items, &run.truth, ScoringMode::Closure);
        ms_points.push((r.recall.unwrap_or(0.0), r.precision.unwrap_or(0.0)));
    }
    let best = |points: &[(f64, f64)], level: f64| {
        points
            .iter()
            .filter(|(r, _)| *r >= level)
            .map(|&(_, p)| p)
            .fold(None, |acc: Option<f64>, p| Some(acc.map_or(p, |a| a.max(p))))
    };
    let mut notes = Vec::new();
    let mut wins = 0;
    for level in [0.2, 0.3, 0.4] {
        let nb = best(&nb_points, level);
        let ms = best(&ms_points, level);
        let won = match (nb, ms) {
            (Some(n), Some(m)) => n >= m,
            (Some(_), None) => true,
            _ => false,
        };
        wins += usize::from(won);
        notes.push(format!(
            "R>={level}: nb {} vs support {}",
            nb.map_or("none".into(), |p| format!("{p:.4}")),
            ms.map_or("none".into(), |p| format!("{p:.4}"))
        ));
    }
    ensure(wins == 3, || notes.join("; "))?;
    Ok(notes.join("; "))
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn threshold_decrease(run: &Artif2) -> Outcome {
    let n = run.db.transaction_count() as f64;
    let mut by_size: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for m in &run.mined {
        by_size
            .entry(m.items.len())
            .or_default()
            .push(m.sigma_freq as f64 / n);
    }
    let medians: Vec<(usize, f64)> = by_size.into_iter().map(|(s, v)| (s, median(v))).collect();
    ensure(medians.len() >= 2, || format!("only sizes {medians:?}"))?;
    ensure(medians.windows(2).all(|w| w[1].1 <= w[0].1), || format!("medians {medians:?}"))?;
    Ok(medians
        .iter()
        .map(|(s, m)| format!("{s}:{m:.5}"))
        .collect::<Vec<_>>()
        .join(" "))
}

fn monotonicity(runs: &[SmallRun]) -> Outcome {
    let mut pairs = 0;
    for (seed, run) in runs.iter().enumerate() {
        for ti in 0..THETAS.len() {
            for pj in 1..PIS.len() {
                let strict = as_sets(&run.mined[&(ti, pj)]);
                let loose = as_sets(&run.mined[&(ti, pj - 1)]);
                ensure(strict.is_subset(&loose), || {
                    format!("db {seed}: pi {} not within pi {}", PIS[pj], PIS[pj - 1])
                })?;
                pairs += 1;
            }
        }
        for pj in 0..PIS.len() {
            for ti in 1..THETAS.len() {
                let strict = as_sets(&run.mined[&(ti, pj)]);
                let loose = as_sets(&run.mined[&(ti - 1, pj)]);
                ensure(strict.is_subset(&loose), || {
                    format!("db {seed}: theta {} not within theta {}", THETAS[ti], THETAS[ti - 1])
                })?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} nested pairs"))
}

fn generator_sanity() -> Outcome {
    let clock = Instant::now();
    let config = GenConfig {
        n_transactions: 20_000,
        ..GenConfig::artif_1()
    };
    let (db1, t1) = generate(&config).map_err(|e| e.to_string())?;
    let (db2, t2) = generate(&config).map_err(|e| e.to_string())?;
    let elapsed = clock.elapsed();
    let mean = db1.incidence_total() as f64 / db1.transaction_count() as f64;
    let mut a = Vec::new();
    let mut b = Vec::new();
    db1.write_basket(&mut a).map_err(|e| e.to_string())?;
    db2.write_basket(&mut b).map_err(|e| e.to_string())?;
    let mut ta = Vec::new();
    let mut tb = Vec::new();
    t1.write(&mut ta).map_err(|e| e.to_string())?;
    t2.write(&mut tb).map_err(|e| e.to_string())?;
    ensure((9.5..=10.5).contains(&mean), || format!("mean transaction size {mean}"))?;
    ensure(a == b && ta == tb, || "reruns differ".into())?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("mean size {mean:.3}, {} bytes identical across runs", a.len()))
}

fn linear_scaling(run: &Artif2) -> Outcome {
    let mut points = Vec::new();
    for n in [5_000usize, 10_000, 20_000] {
        let sample = run.db.head(n);
        let params = fit_database(&sample, &FitOptions::default())
            .map_err(|e| e.to_string())?
            .params;
        let cfg = MinerConfig::new(params, 0.95, 0.5).map_err(|e| e.to_string())?;
        let mut best = f64::INFINITY;
        for _ in 0..3 {
            let clock = Instant::now();
            nb_dfs(&sample, &cfg).map_err(|e| e.to_string())?;
            best = best.min(clock.elapsed().as_secs_f64());
        }
        points.push((n as f64, best));
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / 3.0;
    let my = points.iter().map(|p| p.1).sum::<f64>() / 3.0;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    let times = points
        .iter()
        .map(|(n, t)| format!("{n}:{:.3}s", t))
        .collect::<Vec<_>>()
        .join(" ");
    ensure(r2 >= 0.9, || format!("R^2 = {r2:.4} ({times})"))?;
    Ok(format!("R^2 = {r2:.4} ({times})"))
}

fn main() {
    // libtest flags (e.g. from `cargo test -- --nocapture`) are ignored
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "worked example", worked_example()));
    results.push((2, "moments fit", moments_fit()));
    results.push((3, "recursion vs direct pmf", recursion_vs_direct()));

    let clock = Instant::now();
    let runs = small_runs();
    let mine_time = clock.elapsed();
    match &runs {
        Ok(runs) => {
            results.push((4, "miner oracle", miner_oracle(runs, mine_time)));
            results.push((5, "baseline oracles", baseline_oracles(runs)));
            results.push((6, "support/confidence thresholds", confidence_equivalence(runs)));
        }
        Err(e) => {
            for (id, name) in [(4, "miner oracle"), (5, "baseline oracles"), (6, "support/confidence thresholds")] {
                results.push((id, name, Err(e.clone())));
            }
        }
    }

    let clock = Instant::now();
    let artif = artif2();
    let setup = clock.elapsed();
    match &artif {
        Ok(a) => {
            results.push((7, "actual precision", actual_precision(a, setup)));
            results.push((8, "dominance over min-support", dominance(a)));
            results.push((9, "threshold decrease", threshold_decrease(a)));
        }
        Err(e) => {
            for (id, name) in [(7, "actual precision"), (8, "dominance over min-support"), (9, "threshold decrease")] {
                results.push((id, name, Err(e.clone())));
            }
        }
    }
    results.push((
        10,
        "monotonicity",
        runs.as_ref().map_err(Clone::clone).and_then(|r| monotonicity(r)),
    ));
    results.push((11, "generator sanity", generator_sanity()));
    results.push((
        12,
        "linear scaling",
        artif.as_ref().map_err(Clone::clone).and_then(linear_scaling),
    ));

    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
