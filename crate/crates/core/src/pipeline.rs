//! End-to-end pipeline over the artifact store: ingest, train, evaluate,
//! explain, agreement and report. Each stage reads the artifacts of the
//! previous ones and writes its own; reruns with the same configuration and
//! seed rewrite byte-identical documents.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agreement::{agreement_report, median, AgreementBasis, AgreementReport};
use crate::dataset::{from_letor, ingest_csv, ColumnMapping, QueryId, RankingTable};
use crate::error::{Error, Result};
use crate::explain::{explain_range, Background, ExplainConfig, ExplanationMatrix, Method};
use crate::metrics::{format_report_table, FitReport, ReportRow};
use crate::rankers::{train, Algorithm, Hyperparameters, LearnedRanking, TrainedRanker};
use crate::store::{validate_segment, ArtifactKey, Store};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Letor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MappingSource {
    File(PathBuf),
    Inline(ColumnMapping),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// Store identifier; defaults to the mapping's `dataset_id`, then the
    /// file stem.
    pub id: Option<String>,
    pub path: PathBuf,
    /// Inferred from the extension when unset (`.csv` vs anything else).
    pub format: Option<DataFormat>,
    pub mapping: Option<MappingSource>,
    /// Queries to keep; all when unset.
    pub years: Option<Vec<QueryId>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankerSpec {
    pub id: String,
    #[serde(flatten)]
    pub hyperparameters: Hyperparameters,
}

impl RankerSpec {
    pub fn default_for(algorithm: Algorithm) -> Self {
        RankerSpec {
            id: algorithm.name().to_string(),
            hyperparameters: algorithm.default_hyperparameters(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    pub methods: Vec<Method>,
    /// Ground-truth rank range to explain per query; the whole query when
    /// unset. Clipped to the query size.
    pub range: Option<(usize, usize)>,
    pub samples: usize,
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    pub grid_size: usize,
    pub grid_low: f64,
    pub grid_high: f64,
    pub agreement_basis: AgreementBasis,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        let c = ExplainConfig::default();
        ExplainSettings {
            methods: Method::ALL.to_vec(),
            range: None,
            samples: c.samples,
            kernel_width: c.kernel_width,
            ridge: c.ridge,
            grid_size: c.grid_size,
            grid_low: c.grid_low,
            grid_high: c.grid_high,
            agreement_basis: AgreementBasis::default(),
        }
    }
}

impl ExplainSettings {
    pub fn config(&self) -> ExplainConfig {
        ExplainConfig {
            samples: self.samples,
            kernel_width: self.kernel_width,
            ridge: self.ridge,
            grid_size: self.grid_size,
            grid_low: self.grid_low,
            grid_high: self.grid_high,
        }
    }
}

fn default_store() -> PathBuf {
    PathBuf::from("store")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    #[serde(default = "default_store")]
    pub store: PathBuf,
    pub dataset: DatasetConfig,
    /// All six algorithms with default settings when empty.
    #[serde(default)]
    pub rankers: Vec<RankerSpec>,
    #[serde(default)]
    pub explain: ExplainSettings,
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it are resolved against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&s)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        join(&mut self.store);
        join(&mut self.dataset.path);
        if let Some(MappingSource::File(p)) = &mut self.dataset.mapping {
            join(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(id) = &self.dataset.id {
            validate_segment(id)?;
        }
        let mut seen = std::collections::BTreeSet::new();
        for r in &self.rankers {
            validate_segment(&r.id)?;
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Config(format!("ranker id '{}' is listed twice", r.id)));
            }
        }
        if self.explain.methods.is_empty() {
            return Err(Error::Config("explain.methods must name at least one method".into()));
        }
        if let Some((lo, hi)) = self.explain.range {
            if lo < 1 || lo > hi {
                return Err(Error::Config(format!("explain.range ({lo}, {hi}) is empty")));
            }
        }
        self.explain.config().validate()
    }

    pub fn rankers(&self) -> Vec<RankerSpec> {
        if self.rankers.is_empty() {
            Algorithm::ALL.iter().map(|&a| RankerSpec::default_for(a)).collect()
        } else {
            self.rankers.clone()
        }
    }

    /// Keeps only the rankers whose id or algorithm name matches one of
    /// `names` (case-insensitive).
    pub fn select_rankers(&mut self, names: &[String]) -> Result<()> {
        let all = self.rankers();
        let mut out = Vec::new();
        for n in names {
            let hit = all.iter().find(|r| r.id.eq_ignore_ascii_case(n)).cloned().or_else(|| {
                n.parse::<Algorithm>().ok().map(|a| {
                    all.iter()
                        .find(|r| r.hyperparameters.algorithm() == a)
                        .cloned()
                        .unwrap_or_else(|| RankerSpec::default_for(a))
                })
            });
            match hit {
                Some(r) if !out.iter().any(|o: &RankerSpec| o.id == r.id) => out.push(r),
                Some(_) => {}
                None => {
                    return Err(Error::Config(format!(
                        "unknown ranker '{n}'; available: {}",
                        all.iter().map(|r| r.id.as_str()).collect::<Vec<_>>().join(", ")
                    )))
                }
            }
        }
        self.rankers = out;
        self.validate()
    }

    pub fn mapping(&self) -> Result<Option<ColumnMapping>> {
        match &self.dataset.mapping {
            None => Ok(None),
            Some(MappingSource::Inline(m)) => Ok(Some(m.clone())),
            Some(MappingSource::File(p)) => ColumnMapping::from_file(p).map(Some),
        }
    }

    pub fn dataset_id(&self) -> Result<String> {
        let id = match (&self.dataset.id, self.mapping()?.and_then(|m| m.dataset_id)) {
            (Some(id), _) => id.clone(),
            (None, Some(id)) => id,
            (None, None) => self
                .dataset
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::Config("cannot derive a dataset id from the data path".into()))?,
        };
        validate_segment(&id)?;
        Ok(id)
    }

    fn format(&self) -> DataFormat {
        self.dataset.format.unwrap_or_else(|| {
            match self.dataset.path.extension().and_then(|e| e.to_str()) {
                Some(e) if e.eq_ignore_ascii_case("csv") => DataFormat::Csv,
                _ => DataFormat::Letor,
            }
        })
    }
}

/// Attaches the stage that produces a missing artifact to not-found errors.
fn require<T>(r: Result<T>, stage: &str) -> Result<T> {
    r.map_err(|e| match e {
        Error::NotFound(what) => Error::NotFound(format!("{what} (run `{stage}` first)")),
        other => other,
    })
}

pub fn load_table(store: &Store, dataset_id: &str) -> Result<RankingTable> {
    let s = require(store.get_string(&ArtifactKey::dataset(dataset_id)), "ingest")?;
    RankingTable::from_json(&s)
}

pub fn load_trained(store: &Store, dataset_id: &str, ranker_id: &str) -> Result<TrainedRanker> {
    let s = require(store.get_string(&ArtifactKey::ranker(dataset_id, ranker_id)), "train")?;
    TrainedRanker::from_document(&s)
}

pub fn load_fit(store: &Store, dataset_id: &str, ranker_id: &str, query_id: QueryId) -> Result<FitReport> {
    require(store.get_json(&ArtifactKey::fit(dataset_id, ranker_id, query_id)), "evaluate")
}

pub fn load_explanation(
    store: &Store,
    dataset_id: &str,
    ranker_id: &str,
    query_id: QueryId,
    method: Method,
    seed: u64,
) -> Result<ExplanationMatrix> {
    let key = ArtifactKey::explanation(dataset_id, ranker_id, query_id, method, seed);
    ExplanationMatrix::from_document(&require(store.get_string(&key), "explain")?)
}

pub fn load_agreement(store: &Store, dataset_id: &str, ranker_id: &str, query_id: QueryId) -> Result<AgreementReport> {
    require(store.get_json(&ArtifactKey::agreement(dataset_id, ranker_id, query_id)), "agreement")
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestSummary {
    pub dataset_id: String,
    pub queries: usize,
    pub rows: usize,
    pub attributes: usize,
    pub rejected: usize,
}

pub fn ingest(cfg: &PipelineConfig, store: &Store) -> Result<IngestSummary> {
    let id = cfg.dataset_id()?;
    let (mut table, rejected) = match cfg.format() {
        DataFormat::Csv => {
            let mapping = cfg
                .mapping()?
                .ok_or_else(|| Error::Config("CSV input needs a column mapping (dataset.mapping)".into()))?;
            let ingested = ingest_csv(&cfg.dataset.path, &mapping)?;
            for r in &ingested.rejected {
                log::warn!("skipped data row {}: {}", r.row, r.reason);
            }
            (ingested.table, ingested.rejected.len())
        }
        DataFormat::Letor => (from_letor(&cfg.dataset.path)?, 0),
    };
    table.dataset_id = id.clone();
    if let Some(years) = &cfg.dataset.years {
        for y in years {
            if table.query(*y).is_none() {
                return Err(Error::Dataset(format!("year {y} is not in {}", cfg.dataset.path.display())));
            }
        }
        table.queries.retain(|q| years.contains(&q.query_id));
    }
    let table = table.canonicalized();
    table.validate()?;
    store.put_json(&ArtifactKey::dataset(&id), &table)?;
    Ok(IngestSummary {
        dataset_id: id,
        queries: table.queries.len(),
        rows: table.n_rows(),
        attributes: table.n_attributes(),
        rejected,
    })
}

pub fn train_all(cfg: &PipelineConfig, store: &Store) -> Result<Vec<String>> {
    let id = cfg.dataset_id()?;
    let table = load_table(store, &id)?;
    let specs = cfg.rankers();
    let trained = specs
        .par_iter()
        .map(|spec| {
            let start = std::time::Instant::now();
            let r = train(&spec.id, &table, &spec.hyperparameters, cfg.seed)?;
            log::info!("trained {} in {:.2?}", spec.id, start.elapsed());
            Ok(r)
        })
        .collect::<Result<Vec<_>>>()?;
    for r in &trained {
        store.put(&ArtifactKey::ranker(&id, &r.ranker_id), r.to_document()?.as_bytes())?;
    }
    Ok(trained.into_iter().map(|r| r.ranker_id).collect())
}

pub fn evaluate(cfg: &PipelineConfig, store: &Store) -> Result<Vec<FitReport>> {
    let id = cfg.dataset_id()?;
    let table = load_table(store, &id)?;
    let mut fits = Vec::new();
    for spec in cfg.rankers() {
        let ranker = load_trained(store, &id, &spec.id)?;
        for q in &table.queries {
            let learned: LearnedRanking = ranker.learned_ranking(q)?;
            let fit = FitReport::compute(
                &ranker.ranker_id,
                q.query_id,
                learned.candidate_ids.clone(),
                &q.ranks(),
                &q.labels(),
                &learned.proxy_ranks,
            )?;
            store.put_json(&ArtifactKey::ranking(&id, &spec.id, q.query_id), &learned)?;
            store.put_json(&ArtifactKey::fit(&id, &spec.id, q.query_id), &fit)?;
            fits.push(fit);
        }
    }
    Ok(fits)
}

pub fn explain_all(cfg: &PipelineConfig, store: &Store) -> Result<usize> {
    let id = cfg.dataset_id()?;
    let table = load_table(store, &id)?;
    let background = Background::from_table(&table);
    let ecfg = cfg.explain.config();
    let mut written = 0;
    for spec in cfg.rankers() {
        let ranker = load_trained(store, &id, &spec.id)?;
        for q in &table.queries {
            let range = match cfg.explain.range {
                None => (1, q.len()),
                Some((lo, hi)) => (lo.min(q.len()), hi.min(q.len())),
            };
            for &method in &cfg.explain.methods {
                let m = explain_range(
                    &ranker,
                    q,
                    &table.attribute_names,
                    method,
                    range,
                    &background,
                    &ecfg,
                    cfg.seed,
                )?;
                let key = ArtifactKey::explanation(&id, &spec.id, q.query_id, method, cfg.seed);
                store.put(&key, m.to_document()?.as_bytes())?;
                written += 1;
            }
        }
    }
    Ok(written)
}

pub fn agreement_all(cfg: &PipelineConfig, store: &Store) -> Result<Vec<AgreementReport>> {
    let id = cfg.dataset_id()?;
    let table = load_table(store, &id)?;
    let mut reports = Vec::new();
    for spec in cfg.rankers() {
        for q in &table.queries {
            let lime = load_explanation(store, &id, &spec.id, q.query_id, Method::Lime, cfg.seed)?;
            let ice = load_explanation(store, &id, &spec.id, q.query_id, Method::Ice, cfg.seed)?;
            let report = agreement_report(&lime, &ice, cfg.explain.agreement_basis)?;
            store.put_json(&ArtifactKey::agreement(&id, &spec.id, q.query_id), &report)?;
            reports.push(report);
        }
    }
    Ok(reports)
}

/// Per-ranker table rows: metrics averaged over queries, agreement median
/// over all candidates of all queries when agreement reports exist.
pub fn report_rows(cfg: &PipelineConfig, store: &Store) -> Result<Vec<ReportRow>> {
    let id = cfg.dataset_id()?;
    let table = load_table(store, &id)?;
    let mut rows = Vec::new();
    for spec in cfg.rankers() {
        let fits = table
            .queries
            .iter()
            .map(|q| load_fit(store, &id, &spec.id, q.query_id))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&FitReport> = fits.iter().collect();
        let Some(mut row) = ReportRow::from_fits(&spec.id, &refs) else {
            continue;
        };
        let mut pooled = Vec::new();
        let mut complete = true;
        for q in &table.queries {
            match load_agreement(store, &id, &spec.id, q.query_id) {
                Ok(a) => pooled.extend(a.defined()),
                Err(Error::NotFound(_)) => complete = false,
                Err(e) => return Err(e),
            }
        }
        row.agreement_median = if complete { median(&pooled) } else { None };
        rows.push(row);
    }
    Ok(rows)
}

pub fn report(cfg: &PipelineConfig, store: &Store) -> Result<String> {
    Ok(format_report_table(&cfg.dataset_id()?, &report_rows(cfg, store)?))
}

/// Runs every stage in order and returns the report table.
pub fn run(cfg: &PipelineConfig, store: &Store) -> Result<String> {
    ingest(cfg, store)?;
    train_all(cfg, store)?;
    evaluate(cfg, store)?;
    explain_all(cfg, store)?;
    if cfg.explain.methods.contains(&Method::Lime) && cfg.explain.methods.contains(&Method::Ice) {
        agreement_all(cfg, store)?;
    }
    report(cfg, store)
}

/// Relative path → content of every file under the store root.
pub fn snapshot(store: &Store) -> Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for key in store.list("")? {
        out.insert(key.relative_path()?, store.get(&key)?);
    }
    Ok(out)
}
