use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rankscope::dataset::RankingTable;
use rankscope::pipeline::{self, PipelineConfig};
use rankscope::rankers::TrainedRanker;
use rankscope::store::Store;
use rankscope::synthetic::{write_csv, SyntheticSpec};
use sha2::{Digest, Sha256};

pub const FIXTURE_SEED: u64 = 20240501;

pub fn spec() -> SyntheticSpec {
    SyntheticSpec::default()
}

pub fn table() -> RankingTable {
    spec().generate().expect("fixture generates")
}

/// The generating function `w* · x` as a ranker.
pub fn linear_truth() -> TrainedRanker {
    TrainedRanker::linear("truth", spec().weights)
}

/// Writes the fixture CSV and a pipeline config with every ranker and both
/// explainers into `dir`.
pub fn write_pipeline(dir: &Path) -> PipelineConfig {
    write_csv(&table(), std::fs::File::create(dir.join("synthetic.csv")).unwrap()).unwrap();
    let text = format!(
        r#"seed = {FIXTURE_SEED}
store = "store"

[dataset]
id = "synthetic"
path = "synthetic.csv"
mapping = {{ year = "year", entity = "entity", rank = "rank" }}

[explain]
methods = ["LIME", "ICE"]
"#
    );
    let path = dir.join("pipeline.toml");
    std::fs::write(&path, text).unwrap();
    PipelineConfig::from_file(&path).unwrap()
}

pub struct FixtureStore {
    _dir: tempfile::TempDir,
    pub root: PathBuf,
}

impl FixtureStore {
    pub fn store(&self) -> Store {
        Store::new(&self.root)
    }
}

/// One full pipeline run over the fixture, shared by the criteria that need
/// a populated store.
pub fn fixture_store() -> &'static FixtureStore {
    static F: OnceLock<FixtureStore> = OnceLock::new();
    F.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_pipeline(dir.path());
        pipeline::run(&cfg, &Store::new(&cfg.store)).expect("fixture pipeline runs");
        FixtureStore {
            root: cfg.store.clone(),
            _dir: dir,
        }
    })
}

/// SHA-256 per relative path, and one digest over all `(path, file digest)` pairs.
pub fn store_digest(store: &Store) -> (String, BTreeMap<String, String>) {
    let files = pipeline::snapshot(store).unwrap();
    let mut all = Sha256::new();
    let mut per_file = BTreeMap::new();
    for (path, bytes) in files {
        let h = hex(&Sha256::digest(&bytes));
        all.update(path.as_bytes());
        all.update([0]);
        all.update(h.as_bytes());
        per_file.insert(path, h);
    }
    (hex(&all.finalize()), per_file)
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Population mean and standard deviation per attribute over every row.
pub fn population_moments(table: &RankingTable) -> (Vec<f64>, Vec<f64>) {
    let p = table.n_attributes();
    let n = table.n_rows() as f64;
    let mut mean = vec![0.0; p];
    for r in table.all_rows() {
        for j in 0..p {
            mean[j] += r[j] / n;
        }
    }
    let mut var = vec![0.0; p];
    for r in table.all_rows() {
        for j in 0..p {
            var[j] += (r[j] - mean[j]).powi(2) / n;
        }
    }
    (mean, var.into_iter().map(f64::sqrt).collect())
}

/// Average ranks (1-based) with ties sharing the mean rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Collects failure messages; `finish` turns them into an outcome.
#[derive(Default)]
pub struct Checks {
    pub notes: Vec<String>,
    pub failures: Vec<String>,
}

impl Checks {
    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn check(&mut self, ok: bool, s: impl Into<String>) {
        let s = s.into();
        if ok {
            self.notes.push(s);
        } else {
            self.failures.push(s);
        }
    }

    pub fn finish(self) -> crate::Outcome {
        if self.failures.is_empty() {
            Ok(self.notes)
        } else {
            let mut all = self.failures;
            all.extend(self.notes);
            Err(all)
        }
    }
}
