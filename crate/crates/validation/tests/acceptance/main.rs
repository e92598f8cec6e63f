//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero when any
//! criterion fails. `UPDATE_GOLDEN=1` rewrites the service golden files.

mod agreement;
mod determinism;
mod gradient;
mod ice;
mod invariance;
mod lime;
mod metric_oracles;
mod recovery;
mod service_contract;
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

/// `Ok` carries detail lines for the report; `Err` says what failed.
pub type Outcome = Result<Vec<String>, Vec<String>>;

struct Criterion {
    id: u32,
    name: &'static str,
    run: fn() -> Outcome,
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, name: "metric oracles (NDCG@k, P@k, MAP, Kendall tau) on all permutations n <= 6", run: metric_oracles::run },
    Criterion { id: 2, name: "synthetic linear recovery on held-out years", run: recovery::run },
    Criterion { id: 3, name: "ListNet gradient vs central finite differences", run: gradient::run },
    Criterion { id: 4, name: "LIME surrogate vs closed-form weighted ridge; attribute recovery", run: lime::run },
    Criterion { id: 5, name: "ICE impact closed form on the linear fixture", run: ice::run },
    Criterion { id: 6, name: "LIME-ICE agreement on the linear fixture", run: agreement::run },
    Criterion { id: 7, name: "end-to-end determinism (store hash)", run: determinism::run },
    Criterion { id: 8, name: "invariance properties (1000 cases each)", run: invariance::run },
    Criterion { id: 9, name: "service contract (golden files, ground-truth-anchored ranges)", run: service_contract::run },
];

fn main() -> ExitCode {
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for c in CRITERIA {
        if !filter.is_empty() && !filter.contains(&c.id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run))
            .unwrap_or_else(|p| {
                let msg = p
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_else(|| "panic".into());
                Err(vec![format!("panicked: {msg}")])
            });
        let secs = start.elapsed().as_secs_f64();
        let (tag, lines) = match outcome {
            Ok(l) => ("PASS", l),
            Err(l) => {
                failed += 1;
                ("FAIL", l)
            }
        };
        println!("{tag} [{}] {} ({secs:.2}s)", c.id, c.name);
        for l in lines {
            println!("       {l}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion(s) failed");
        ExitCode::FAILURE
    }
}
