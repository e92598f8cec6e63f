//! Leave-one-year-out on the noiseless linear fixture. The statistic per
//! algorithm is the mean over the six held-out years; the worst year is
//! reported alongside.

use std::time::Instant;

use rankscope::dataset::split_leave_one_year_out;
use rankscope::metrics::{kendall_tau, ndcg_at_k, ranks_to_order};
use rankscope::rankers::{train, Algorithm};

use crate::support::{table, Checks, FIXTURE_SEED};
use crate::Outcome;

fn tau_threshold(a: Algorithm) -> (f64, Option<f64>) {
    match a {
        Algorithm::RankingSvm | Algorithm::CoordinateAscent => (0.95, Some(0.9)),
        _ => (0.8, None),
    }
}

pub fn run() -> Outcome {
    let start = Instant::now();
    let mut c = Checks::default();
    let table = table();
    let years = table.query_ids();
    for a in Algorithm::ALL {
        let (tau_min, ndcg_min) = tau_threshold(a);
        let mut taus = Vec::new();
        let mut ndcgs = Vec::new();
        for &y in &years {
            let (train_set, test_set) = split_leave_one_year_out(&table, y).unwrap();
            let ranker = train(a.name(), &train_set, &a.default_hyperparameters(), FIXTURE_SEED).unwrap();
            let q = &test_set.queries[0];
            let learned = ranker.learned_ranking(q).unwrap().proxy_ranks;
            taus.push(kendall_tau(&q.ranks(), &learned).unwrap());
            ndcgs.push(ndcg_at_k(&q.labels(), &ranks_to_order(&learned).unwrap(), 10).unwrap());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let (tau, ndcg) = (mean(&taus), mean(&ndcgs));
        let mut ok = tau >= tau_min;
        let mut line = format!(
            "{:<16} tau {tau:.3} (worst year {:.3}) >= {tau_min}; NDCG@10 {ndcg:.3} (worst year {:.3})",
            a.name(),
            lo(&taus),
            lo(&ndcgs)
        );
        if let Some(m) = ndcg_min {
            ok &= ndcg >= m;
            line.push_str(&format!(" >= {m}"));
        }
        c.check(ok, line);
    }
    let secs = start.elapsed().as_secs_f64();
    c.check(secs < 60.0, format!("runtime {secs:.2}s (limit 60s)"));
    c.finish()
}
