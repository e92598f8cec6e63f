//! Each metric recomputed from a different formulation than the library's
//! and compared on every (truth, learned) permutation pair for n <= 6.

use std::time::Instant;

use rankscope::metrics::{average_precision, kendall_tau, mean_average_precision, ndcg_at_k, precision_at_k, ranks_to_order};

use crate::support::Checks;
use crate::Outcome;

const TOL: f64 = 1e-12;

/// All permutations of 1..=n as rank vectors (Heap's algorithm).
fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut a: Vec<usize> = (1..=n).collect();
    let mut out = vec![a.clone()];
    let mut c = vec![0; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            out.push(a.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

/// DCG summed over candidates by their learned rank; the ideal uses the
/// truth ranks because labels are `n - truth`.
fn ndcg_oracle(truth: &[usize], learned: &[usize], k: usize) -> f64 {
    let n = truth.len();
    let gain = |i: usize| (n - truth[i]) as f64;
    let disc = |r: usize| 1.0 / ((r + 1) as f64).log2();
    let dcg: f64 = (0..n).filter(|&i| learned[i] <= k).map(|i| gain(i) * disc(learned[i])).sum();
    let ideal: f64 = (0..n).filter(|&i| truth[i] <= k).map(|i| gain(i) * disc(truth[i])).sum();
    if ideal == 0.0 {
        1.0
    } else {
        dcg / ideal
    }
}

fn precision_oracle(truth: &[usize], learned: &[usize], k: usize) -> f64 {
    let top_truth: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] <= k).collect();
    let top_learned: Vec<usize> = (0..learned.len()).filter(|&i| learned[i] <= k).collect();
    top_truth.iter().filter(|i| top_learned.contains(i)).count() as f64 / k as f64
}

/// Mean over relevant items of the precision at that item's learned rank.
fn ap_oracle(truth: &[usize], learned: &[usize], rel_k: usize) -> f64 {
    let relevant: Vec<usize> = (0..truth.len()).filter(|&i| truth[i] <= rel_k).collect();
    let sum: f64 = relevant
        .iter()
        .map(|&r| {
            let above = relevant.iter().filter(|&&o| learned[o] <= learned[r]).count();
            above as f64 / learned[r] as f64
        })
        .sum();
    sum / relevant.len() as f64
}

/// `1 - 4 I / (n (n - 1))` with `I` the bubble-sort swap count of the learned
/// ranks listed in truth order.
fn kendall_oracle(truth: &[usize], learned: &[usize]) -> f64 {
    let n = truth.len();
    if n < 2 {
        return 1.0;
    }
    let mut seq = vec![0; n];
    for i in 0..n {
        seq[truth[i] - 1] = learned[i];
    }
    let mut swaps = 0usize;
    for pass in 0..n {
        for j in 0..n - 1 - pass {
            if seq[j] > seq[j + 1] {
                seq.swap(j, j + 1);
                swaps += 1;
            }
        }
    }
    1.0 - 4.0 * swaps as f64 / (n * (n - 1)) as f64
}

pub fn run() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let mut compared = 0usize;
    let mut worst = 0.0f64;
    let mut mismatches = Vec::new();
    let mut record = |what: &str, got: f64, want: f64, case: &dyn Fn() -> String| {
        compared += 1;
        let e = (got - want).abs();
        worst = worst.max(e);
        if !(e <= TOL) && mismatches.len() < 5 {
            mismatches.push(format!("{what} {}: got {got}, oracle {want}", case()));
        }
    };
    for n in 1..=6 {
        let perms = permutations(n);
        for truth in &perms {
            let labels: Vec<u32> = truth.iter().map(|&t| (n - t) as u32).collect();
            let mut aps: Vec<Vec<f64>> = vec![Vec::new(); n];
            for learned in &perms {
                let case = || format!("truth={truth:?} learned={learned:?}");
                let order = ranks_to_order(learned).unwrap();
                for k in 1..=n {
                    record("NDCG", ndcg_at_k(&labels, &order, k).unwrap(), ndcg_oracle(truth, learned, k), &case);
                    record("P", precision_at_k(truth, learned, k).unwrap(), precision_oracle(truth, learned, k), &case);
                    let ap = average_precision(truth, learned, k).unwrap();
                    record("AP", ap, ap_oracle(truth, learned, k), &case);
                    aps[k - 1].push(ap_oracle(truth, learned, k));
                }
                record("tau", kendall_tau(truth, learned).unwrap(), kendall_oracle(truth, learned), &case);
            }
            // MAP over the query set {(truth, learned) : all learned}
            let queries: Vec<(&[usize], &[usize])> = perms.iter().map(|l| (truth.as_slice(), l.as_slice())).collect();
            for k in 1..=n {
                let want = aps[k - 1].iter().sum::<f64>() / aps[k - 1].len() as f64;
                let case = || format!("truth={truth:?} k={k}");
                record("MAP", mean_average_precision(&queries, k).unwrap(), want, &case);
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(mismatches.is_empty(), format!("{compared} comparisons, max |error| {worst:.2e} (tolerance {TOL:.0e})"));
    for m in mismatches {
        c.check(false, m);
    }
    c.check(secs < 5.0, format!("runtime {secs:.2}s (limit 5s)"));
    c.finish()
}
