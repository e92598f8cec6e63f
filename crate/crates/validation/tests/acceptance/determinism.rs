use rankscope::pipeline;
use rankscope::store::Store;

use crate::support::{fixture_store, store_digest, write_pipeline, Checks};
use crate::Outcome;

/// A second independent run in a fresh directory must hash identically to
/// the shared fixture store.
pub fn run() -> Outcome {
    let mut c = Checks::default();
    let (first, first_files) = store_digest(&fixture_store().store());
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_pipeline(dir.path());
    pipeline::run(&cfg, &Store::new(&cfg.store)).unwrap();
    let (second, second_files) = store_digest(&Store::new(&cfg.store));
    let differing: Vec<&String> = first_files
        .keys()
        .chain(second_files.keys())
        .filter(|k| first_files.get(*k) != second_files.get(*k))
        .collect();
    c.check(
        first == second,
        format!("{} artifacts, sha256 {}", first_files.len(), &first[..16]),
    );
    if let Some(d) = differing.first() {
        c.check(false, format!("{} differing artifacts, first {d}", differing.len()));
    }
    c.check(first_files.len() > 6 * 6 * 4, "store holds rankers, rankings, fit reports, explanations and agreement");
    c.finish()
}
