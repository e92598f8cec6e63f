//! Property tests run through `TestRunner` directly so each property reports
//! into the single criterion line. Scores are integer-valued so the affine
//! and monotone maps below are exact in f64.

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rankscope::explain::normalize_values;
use rankscope::metrics::{ndcg_at_k, rank_deviation, ranks_to_order};
use rankscope::rankers::rank;

use crate::support::Checks;
use crate::Outcome;

const CASES: u32 = 1000;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("c{i:03}")).collect()
}

fn int_scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-1000i32..1000).prop_map(f64::from), 1..40)
}

fn permutation(max: usize) -> impl Strategy<Value = Vec<usize>> {
    (1..=max).prop_flat_map(|n| Just((1..=n).collect::<Vec<usize>>()).prop_shuffle())
}

fn affine_shift() -> Result<(), String> {
    let strategy = (int_scores(), 1i32..100, -1000i32..1000);
    runner()
        .run(&strategy, |(s, a, b)| {
            let ids = ids(s.len());
            let shifted: Vec<f64> = s.iter().map(|x| f64::from(a) * x + f64::from(b)).collect();
            prop_assert_eq!(rank(&s, &ids).unwrap(), rank(&shifted, &ids).unwrap());
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn normalization_order() -> Result<(), String> {
    let strategy = (1usize..10, 1usize..8).prop_flat_map(|(m, p)| {
        prop::collection::vec(prop::collection::vec(-1e3f64..1e3, p), m)
    });
    runner()
        .run(&strategy, |raw| {
            let norm = normalize_values(&raw);
            let flat_raw: Vec<f64> = raw.iter().flatten().copied().collect();
            let flat: Vec<f64> = norm.iter().flatten().copied().collect();
            for (i, &x) in flat_raw.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&flat[i]));
                for (k, &y) in flat_raw.iter().enumerate() {
                    if x < y {
                        prop_assert!(flat[i] <= flat[k]);
                    } else if x == y {
                        prop_assert_eq!(flat[i], flat[k]);
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

/// NDCG depends on scores only through the induced order: any strictly
/// increasing map of the scores leaves it unchanged.
fn ndcg_argsort() -> Result<(), String> {
    let strategy = permutation(40).prop_flat_map(|truth| {
        let n = truth.len();
        (Just(truth), prop::collection::vec((-1000i32..1000).prop_map(f64::from), n), 1usize..=12)
    });
    runner()
        .run(&strategy, |(truth, scores, k)| {
            let n = truth.len();
            let k = k.min(n);
            let labels: Vec<u32> = truth.iter().map(|&t| (n - t) as u32).collect();
            let ids = ids(n);
            let mapped: Vec<f64> = scores.iter().map(|s| s * s * s + 7.0).collect();
            let o1 = ranks_to_order(&rank(&scores, &ids).unwrap()).unwrap();
            let o2 = ranks_to_order(&rank(&mapped, &ids).unwrap()).unwrap();
            prop_assert_eq!(&o1, &o2);
            let a = ndcg_at_k(&labels, &o1, k).unwrap();
            let b = ndcg_at_k(&labels, &o2, k).unwrap();
            prop_assert_eq!(a.to_bits(), b.to_bits());
            // the ideal order scores 1
            let ideal = ranks_to_order(&truth).unwrap();
            prop_assert!((ndcg_at_k(&labels, &ideal, k).unwrap() - 1.0).abs() < 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn deviation_symmetry() -> Result<(), String> {
    let strategy = permutation(60).prop_flat_map(|a| {
        let n = a.len();
        (Just(a), Just((1..=n).collect::<Vec<usize>>()).prop_shuffle())
    });
    runner()
        .run(&strategy, |(a, b)| {
            let ab = rank_deviation(&a, &b).unwrap();
            prop_assert_eq!(&ab, &rank_deviation(&b, &a).unwrap());
            prop_assert!(rank_deviation(&a, &a).unwrap().iter().all(|&d| d == 0));
            prop_assert_eq!(ab.iter().all(|&d| d == 0), a == b);
            // Σ (a_i - b_i) = 0, so Σ |a_i - b_i| is even
            if ab.iter().sum::<usize>() % 2 != 0 {
                return Err(TestCaseError::fail("odd total deviation"));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

pub fn run() -> Outcome {
    let mut c = Checks::default();
    let props: [(&str, fn() -> Result<(), String>); 4] = [
        ("score affine-shift rank invariance", affine_shift),
        ("normalization order preservation", normalization_order),
        ("NDCG argsort invariance", ndcg_argsort),
        ("deviation symmetry", deviation_symmetry),
    ];
    for (name, f) in props {
        match f() {
            Ok(()) => c.note(format!("{name}: {CASES} cases")),
            Err(e) => c.check(false, format!("{name}: {e}")),
        }
    }
    c.finish()
}
