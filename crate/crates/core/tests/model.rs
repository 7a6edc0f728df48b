mod support;

use nbfreq::nb_model::{
    expected_frequent_items, fit_em, fit_moments, gof_chi2, nb_pmf, nb_tail, rescale_for_itemset,
    rescale_per_incidence, trim_top, FreqHistogram, NbParams, SampleScale,
};
use nbfreq::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

const SCALE: SampleScale = SampleScale {
    incidence_total: 1000,
    transaction_count: 100,
};

/// Frequencies of `n` items whose rates are Gamma(k, scale) and whose counts
/// are Poisson given the rate.
fn gamma_poisson(seed: u64, n: usize, k: f64, scale: f64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates = Gamma::new(k, scale).unwrap();
    (0..n)
        .map(|_| {
            let lambda: f64 = rates.sample(&mut rng);
            if lambda <= 0.0 {
                0
            } else {
                Poisson::new(lambda).unwrap().sample(&mut rng) as u64
            }
        })
        .collect()
}

#[test]
fn zero_class_probability() {
    let p = nb_pmf(0.844, 118.141, 0).unwrap();
    let expected = 119.141f64.powf(-0.844);
    assert!((p - expected).abs() < 1e-12 * expected);
}

#[test]
fn expected_items_at_rescaled_threshold() {
    let e = 339.0 * nb_tail(0.844, 1.164, 11).unwrap();
    let oracle = 339.0 * support::tail(0.844, 1.164, 11);
    assert!((e - oracle).abs() < 1e-9, "{e} vs {oracle}");
    assert!((e - 0.25136).abs() < 5e-4, "{e}");
}

#[test]
fn moments_of_known_dispersion() {
    let (k, a) = fit_moments(7.0, 14.0).unwrap();
    assert!((k - 7.0).abs() < 1e-12 && (a - 1.0).abs() < 1e-12);
    assert!(matches!(fit_moments(7.0, 7.0), Err(Error::Underdispersed { .. })));
    assert!(matches!(fit_moments(7.0, 3.0), Err(Error::Underdispersed { .. })));
}

#[test]
fn trim_removes_the_top_item() {
    let hist = FreqHistogram::from_frequencies((1..=20).map(|r| if r == 20 { 1000 } else { r }));
    let (trimmed, removed) = trim_top(&hist, 0.05).unwrap();
    assert_eq!(removed, 1);
    assert_eq!(trimmed.items(), 19);
    assert_eq!(trimmed.max_frequency(), Some(19));
    let (same, none) = trim_top(&hist, 0.0).unwrap();
    assert_eq!((same, none), (hist.clone(), 0));
    assert!(trim_top(&hist, 1.0).is_err());
}

#[test]
fn em_recovers_shape_of_gamma_poisson_sample() {
    let runs = 10;
    let mean_k: f64 = (0..runs)
        .map(|seed| {
            let freqs = gamma_poisson(seed, 1000, 1.0, 100.0);
            let hist = FreqHistogram::from_frequencies(freqs.into_iter().filter(|&r| r > 0));
            fit_em(&hist, None, SCALE).unwrap().k
        })
        .sum::<f64>()
        / runs as f64;
    assert!((mean_k - 1.0).abs() < 0.15, "mean k = {mean_k}");
}

#[test]
fn em_with_known_total_matches_moments_on_augmented_histogram() {
    let freqs = gamma_poisson(3, 400, 0.7, 20.0);
    let observed: Vec<u64> = freqs.iter().copied().filter(|&r| r > 0).collect();
    let hist = FreqHistogram::from_frequencies(observed.iter().copied());
    let p = fit_em(&hist, Some(400), SCALE).unwrap();

    let n = 400.0;
    let mean = observed.iter().sum::<u64>() as f64 / n;
    let ss: f64 = freqs.iter().map(|&r| (r as f64 - mean).powi(2)).sum();
    let (k, a) = fit_moments(mean, ss / (n - 1.0)).unwrap();
    assert!((p.k - k).abs() < 1e-9 * k && (p.a - a).abs() < 1e-9 * a);
    assert_eq!(p.n_total, 400.0);
    assert_eq!(p.em_iterations, 0);
}

#[test]
fn goodness_of_fit_accepts_model_data() {
    let accepted = (0..100)
        .filter(|&seed| {
            let freqs = gamma_poisson(1000 + seed, 500, 1.0, 50.0);
            let hist = FreqHistogram::from_frequencies(freqs.into_iter().filter(|&r| r > 0));
            let p = fit_em(&hist, Some(500), SCALE).unwrap();
            let g = gof_chi2(&hist, &p).unwrap();
            assert!(g.classes.iter().all(|c| c.expected >= 5.0), "{:?}", g.classes);
            assert_eq!(g.df, g.classes.len() - 3);
            g.p_value > 0.01
        })
        .count();
    assert!(accepted >= 95, "{accepted} of 100");
}

#[test]
fn expected_frequent_items_for_geometric_model() {
    // k = 1, a = 1 is geometric with Pr[R >= r] = 2^-r
    let p = NbParams::new(1.0, 1.0, 100.0, 100, 10).unwrap();
    let e = expected_frequent_items(&p, 2).unwrap();
    assert!((e - 25.0).abs() < 1e-9, "{e}");
    let mut last = f64::INFINITY;
    for sigma in 0..40 {
        let e = expected_frequent_items(&p, sigma).unwrap();
        assert!(e <= last);
        last = e;
    }
}

#[test]
fn rescaling_follows_incidences() {
    let p = NbParams::new(0.844, 118.14, 1000.0, 50_000, 10_000).unwrap();
    let per = rescale_per_incidence(&p).unwrap();
    assert!((per - 118.14 / 50_000.0).abs() < 1e-15);
    assert!((rescale_for_itemset(per, 500) - 118.14 / 100.0).abs() < 1e-12);
    assert_eq!(rescale_for_itemset(per, 0), 0.0);
}

proptest! {
    #[test]
    fn pmf_agrees_with_gamma_function_formula(k in 0.05f64..20.0, a in 0.01f64..500.0, r in 0u64..300) {
        let got = nb_pmf(k, a, r).unwrap();
        let want = support::pmf(k, a, r);
        prop_assert!((got - want).abs() <= 1e-9 * want.max(1e-300) + 1e-300, "{} vs {}", got, want);
    }

    #[test]
    fn pmf_mean_is_a_times_k(k in 0.2f64..5.0, a in 0.05f64..5.0) {
        let (mut mass, mut mean) = (0.0, 0.0);
        for r in 0..5000u64 {
            let p = nb_pmf(k, a, r).unwrap();
            mass += p;
            mean += r as f64 * p;
        }
        prop_assert!((mass - 1.0).abs() < 1e-9);
        prop_assert!((mean - a * k).abs() < 1e-7 * (1.0 + a * k));
    }

    #[test]
    fn tail_matches_lower_sum(k in 0.1f64..10.0, a in 0.01f64..50.0, rho in 0u64..60) {
        let got = nb_tail(k, a, rho).unwrap();
        let want = support::tail(k, a, rho);
        prop_assert!((got - want).abs() < 1e-9, "{} vs {}", got, want);
    }

    #[test]
    fn moments_round_trip(k in 0.05f64..50.0, a in 0.01f64..100.0) {
        let mean = a * k;
        let var = mean * (1.0 + a);
        let (k2, a2) = fit_moments(mean, var).unwrap();
        prop_assert!((k2 - k).abs() < 1e-8 * k && (a2 - a).abs() < 1e-8 * a);
    }
}
