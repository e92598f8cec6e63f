//! Payload assembly for each endpoint. Everything here is synchronous and
//! reads the store directly; the HTTP layer adds caching.

use std::collections::BTreeMap;

use rankscope::dataset::{QueryGroup, QueryId, RankingTable};
use rankscope::explain::{normalize_importance, order_by_means, ExplanationMatrix, Method};
use rankscope::metrics::FitReport;
use rankscope::pipeline;
use rankscope::store::{ArtifactKind, Store};
use serde::Serialize;

use crate::error::{ServiceError, ServiceResult};
use crate::query::{Average, Params, RangeQuery, RankRange};

pub const PAYLOAD_VERSION: u32 = 1;

pub fn dot_size(deviation: usize) -> f64 {
    1.0 / (1.0 + deviation as f64)
}

#[derive(Debug, Serialize)]
pub struct DatasetList {
    pub datasets: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct YearList {
    pub dataset_id: String,
    pub years: Vec<QueryId>,
}

#[derive(Debug, Serialize)]
pub struct AttributeList {
    pub dataset_id: String,
    pub attributes: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RankerList {
    pub dataset_id: String,
    pub rankers: Vec<String>,
}

pub fn datasets(store: &Store) -> ServiceResult<DatasetList> {
    Ok(DatasetList {
        datasets: store.datasets()?,
    })
}

fn table(store: &Store, dataset_id: &str) -> ServiceResult<RankingTable> {
    pipeline::load_table(store, dataset_id).map_err(|e| match e {
        rankscope::Error::NotFound(_) => ServiceError::NotFound(format!("unknown dataset `{dataset_id}`")),
        other => other.into(),
    })
}

pub fn years(store: &Store, dataset_id: &str) -> ServiceResult<YearList> {
    Ok(YearList {
        dataset_id: dataset_id.to_string(),
        years: table(store, dataset_id)?.query_ids(),
    })
}

pub fn attributes(store: &Store, dataset_id: &str) -> ServiceResult<AttributeList> {
    Ok(AttributeList {
        dataset_id: dataset_id.to_string(),
        attributes: table(store, dataset_id)?.attribute_names,
    })
}

/// Trained ranker ids for a dataset, sorted.
pub fn available_rankers(store: &Store, dataset_id: &str) -> ServiceResult<Vec<String>> {
    Ok(store
        .list(&format!("{dataset_id}/ranker/"))?
        .into_iter()
        .filter(|k| k.kind == ArtifactKind::Ranker && k.dataset_id == dataset_id)
        .filter_map(|k| k.ranker_id)
        .collect())
}

pub fn rankers(store: &Store, dataset_id: &str) -> ServiceResult<RankerList> {
    table(store, dataset_id)?;
    Ok(RankerList {
        dataset_id: dataset_id.to_string(),
        rankers: available_rankers(store, dataset_id)?,
    })
}

fn check_rankers(store: &Store, dataset_id: &str, requested: &[String]) -> ServiceResult<()> {
    let available = available_rankers(store, dataset_id)?;
    match requested.iter().find(|r| !available.contains(r)) {
        Some(r) => Err(ServiceError::UnknownRanker {
            ranker: r.clone(),
            available,
        }),
        None => Ok(()),
    }
}

/// The dataset side of a range query: the query group and the in-range
/// candidates that pass the attribute filters, by ascending truth rank.
/// Depends only on ground truth, never on the rankers.
struct Selection {
    table: RankingTable,
    query_id: QueryId,
    range: RankRange,
    /// Indices into the query group's candidates.
    members: Vec<usize>,
}

impl Selection {
    fn group(&self) -> &QueryGroup {
        self.table.query(self.query_id).expect("selected query exists")
    }
}

fn attribute_index(table: &RankingTable, name: &str) -> ServiceResult<usize> {
    table
        .attribute_index(name)
        .ok_or_else(|| ServiceError::UnknownAttribute {
            attribute: name.to_string(),
            available: table.attribute_names.clone(),
        })
}

fn select(store: &Store, q: &RangeQuery) -> ServiceResult<Selection> {
    let table = table(store, &q.dataset_id)?;
    let group = table.query(q.query_id).ok_or_else(|| {
        ServiceError::NotFound(format!("year {} is not in dataset `{}`", q.query_id, q.dataset_id))
    })?;
    check_rankers(store, &q.dataset_id, &q.rankers)?;
    let filters = q
        .attribute_filters
        .iter()
        .map(|f| Ok((attribute_index(&table, &f.attribute)?, f)))
        .collect::<ServiceResult<Vec<_>>>()?;
    let range = q.range.unwrap_or(RankRange { lo: 1, hi: usize::MAX }).clip(group.len());
    let mut members: Vec<usize> = (0..group.len())
        .filter(|&i| {
            let c = &group.candidates[i];
            range.contains(c.ground_truth_rank) && filters.iter().all(|(j, f)| f.accepts(c.attributes[*j]))
        })
        .collect();
    members.sort_by_key(|&i| group.candidates[i].ground_truth_rank);
    let query_id = group.query_id;
    Ok(Selection {
        table,
        query_id,
        range,
        members,
    })
}

/// Learned rank and deviation per candidate id.
fn deviations(store: &Store, dataset_id: &str, ranker_id: &str, query_id: QueryId) -> ServiceResult<BTreeMap<String, (usize, usize)>> {
    let fit: FitReport = pipeline::load_fit(store, dataset_id, ranker_id, query_id)?;
    Ok(fit
        .candidate_ids
        .into_iter()
        .zip(fit.learned_ranks.into_iter().zip(fit.deviations))
        .collect())
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, candidate_id: &str, what: &str) -> ServiceResult<&'a T> {
    map.get(candidate_id)
        .ok_or_else(|| ServiceError::Internal(format!("{what} has no entry for candidate `{candidate_id}`")))
}

#[derive(Debug, Serialize)]
pub struct RankerDeviation {
    pub ranker_id: String,
    pub learned_rank: usize,
    pub deviation: usize,
    pub within_threshold: bool,
}

#[derive(Debug, Serialize)]
pub struct DeviationRow {
    pub candidate_id: String,
    pub truth_rank: usize,
    /// Position of the truth rank inside the range, 0 at `lo`.
    pub color_index: usize,
    pub deviations: Vec<RankerDeviation>,
}

#[derive(Debug, Serialize)]
pub struct DeviationPayload {
    pub version: u32,
    pub dataset_id: String,
    pub query_id: QueryId,
    pub range: RankRange,
    pub rankers: Vec<String>,
    pub deviation_threshold: Option<usize>,
    pub rows: Vec<DeviationRow>,
}

pub fn deviation(store: &Store, q: &RangeQuery) -> ServiceResult<DeviationPayload> {
    let sel = select(store, q)?;
    let per_ranker = q
        .rankers
        .iter()
        .map(|r| deviations(store, &q.dataset_id, r, sel.query_id))
        .collect::<ServiceResult<Vec<_>>>()?;
    let group = sel.group();
    let rows = sel
        .members
        .iter()
        .map(|&i| {
            let c = &group.candidates[i];
            let deviations = q
                .rankers
                .iter()
                .zip(&per_ranker)
                .map(|(r, m)| {
                    let &(learned_rank, deviation) = lookup(m, &c.candidate_id, "fit report")?;
                    Ok(RankerDeviation {
                        ranker_id: r.clone(),
                        learned_rank,
                        deviation,
                        within_threshold: q.within_threshold(deviation),
                    })
                })
                .collect::<ServiceResult<Vec<_>>>()?;
            Ok(DeviationRow {
                candidate_id: c.candidate_id.clone(),
                truth_rank: c.ground_truth_rank,
                color_index: c.ground_truth_rank - sel.range.lo,
                deviations,
            })
        })
        .collect::<ServiceResult<Vec<_>>>()?;
    Ok(DeviationPayload {
        version: PAYLOAD_VERSION,
        dataset_id: q.dataset_id.clone(),
        query_id: sel.query_id,
        range: sel.range,
        rankers: q.rankers.clone(),
        deviation_threshold: q.deviation_threshold,
        rows,
    })
}

/// Seed of the stored explanation for `(ranker, year, method)`: the requested
/// one, else the only one stored.
fn explanation_seed(store: &Store, q: &RangeQuery, ranker_id: &str, query_id: QueryId) -> ServiceResult<u64> {
    if let Some(s) = q.seed {
        return Ok(s);
    }
    let seeds: Vec<u64> = store
        .list(&format!("{}/explanation/{ranker_id}/{query_id}/", q.dataset_id))?
        .into_iter()
        .filter(|k| k.kind == ArtifactKind::Explanation && k.method == Some(q.method))
        .filter_map(|k| k.seed)
        .collect();
    match seeds.as_slice() {
        [] => Err(ServiceError::NotFound(format!(
            "no {} explanation for ranker `{ranker_id}` in year {query_id} (run `explain` first)",
            q.method
        ))),
        [s] => Ok(*s),
        many => Err(ServiceError::BadRequest(format!(
            "several {} explanations stored for ranker `{ranker_id}` in year {query_id} (seeds {:?}); pass `seed`",
            q.method, many
        ))),
    }
}

fn load_explanation(store: &Store, q: &RangeQuery, ranker_id: &str, query_id: QueryId) -> ServiceResult<ExplanationMatrix> {
    let seed = explanation_seed(store, q, ranker_id, query_id)?;
    Ok(pipeline::load_explanation(store, &q.dataset_id, ranker_id, query_id, q.method, seed)?)
}

#[derive(Debug, Serialize)]
pub struct ImportanceRow {
    pub candidate_id: String,
    pub truth_rank: usize,
    pub color_index: usize,
    pub learned_rank: usize,
    pub deviation: usize,
    pub within_threshold: bool,
    pub dot_size: f64,
    /// Normalized importance per attribute, in `attribute_names` order.
    pub importances: Vec<f64>,
}

#[derive(Debug, Serialize)]
pub struct RankerImportance {
    pub ranker_id: String,
    pub seed: u64,
    /// All attribute names by descending average importance; no truncation.
    pub attribute_order: Vec<String>,
    /// Average line per attribute over the rows selected by `average`; null
    /// when no row qualifies.
    pub means: Option<Vec<f64>>,
    pub rows: Vec<ImportanceRow>,
}

#[derive(Debug, Serialize)]
pub struct ExplanationsPayload {
    pub version: u32,
    pub dataset_id: String,
    pub query_id: QueryId,
    pub method: Method,
    pub range: RankRange,
    pub attribute_names: Vec<String>,
    pub deviation_threshold: Option<usize>,
    pub average: Average,
    pub rankers: Vec<RankerImportance>,
}

fn ranker_importance(store: &Store, q: &RangeQuery, sel: &Selection, ranker_id: &str) -> ServiceResult<RankerImportance> {
    let matrix = load_explanation(store, q, ranker_id, sel.query_id)?;
    if matrix.attribute_names != sel.table.attribute_names {
        return Err(ServiceError::Internal(format!(
            "explanation for `{ranker_id}` does not match the dataset attributes"
        )));
    }
    // normalization spans the whole range, before attribute filters
    let norm = normalize_importance(&matrix, (sel.range.lo, sel.range.hi))?;
    let by_id: BTreeMap<String, &Vec<f64>> = norm.candidate_ids.iter().cloned().zip(&norm.values).collect();
    let dev = deviations(store, &q.dataset_id, ranker_id, sel.query_id)?;
    let group = sel.group();
    let rows = sel
        .members
        .iter()
        .map(|&i| {
            let c = &group.candidates[i];
            let &(learned_rank, deviation) = lookup(&dev, &c.candidate_id, "fit report")?;
            Ok(ImportanceRow {
                candidate_id: c.candidate_id.clone(),
                truth_rank: c.ground_truth_rank,
                color_index: c.ground_truth_rank - sel.range.lo,
                learned_rank,
                deviation,
                within_threshold: q.within_threshold(deviation),
                dot_size: dot_size(deviation),
                importances: (*lookup(&by_id, &c.candidate_id, "explanation")?).clone(),
            })
        })
        .collect::<ServiceResult<Vec<_>>>()?;
    let p = sel.table.n_attributes();
    let averaged: Vec<&ImportanceRow> = rows
        .iter()
        .filter(|r| q.average == Average::Before || r.within_threshold)
        .collect();
    let means = (!averaged.is_empty()).then(|| {
        (0..p)
            .map(|j| averaged.iter().map(|r| r.importances[j]).sum::<f64>() / averaged.len() as f64)
            .collect::<Vec<f64>>()
    });
    let order = match &means {
        Some(m) => order_by_means(m),
        None => (0..p).collect(),
    };
    Ok(RankerImportance {
        ranker_id: ranker_id.to_string(),
        seed: matrix.seed,
        attribute_order: order.iter().map(|&j| sel.table.attribute_names[j].clone()).collect(),
        means,
        rows,
    })
}

fn explanations_for(store: &Store, q: &RangeQuery, sel: &Selection) -> ServiceResult<ExplanationsPayload> {
    let rankers = q
        .rankers
        .iter()
        .map(|r| ranker_importance(store, q, sel, r))
        .collect::<ServiceResult<Vec<_>>>()?;
    Ok(ExplanationsPayload {
        version: PAYLOAD_VERSION,
        dataset_id: q.dataset_id.clone(),
        query_id: sel.query_id,
        method: q.method,
        range: sel.range,
        attribute_names: sel.table.attribute_names.clone(),
        deviation_threshold: q.deviation_threshold,
        average: q.average,
        rankers,
    })
}

pub fn explanations(store: &Store, q: &RangeQuery) -> ServiceResult<ExplanationsPayload> {
    let sel = select(store, q)?;
    explanations_for(store, q, &sel)
}

#[derive(Debug, Serialize)]
pub struct CorrelationPoint {
    pub ranker_id: String,
    pub candidate_id: String,
    pub truth_rank: usize,
    pub deviation: usize,
    pub within_threshold: bool,
    pub dot_size: f64,
    /// Normalized importance (x).
    pub importance: f64,
    /// Raw attribute value (y).
    pub attribute_value: f64,
}

#[derive(Debug, Serialize)]
pub struct CorrelationPayload {
    pub version: u32,
    pub dataset_id: String,
    pub query_id: QueryId,
    pub method: Method,
    pub range: RankRange,
    pub attribute: String,
    pub deviation_threshold: Option<usize>,
    pub points: Vec<CorrelationPoint>,
}

/// `/correlation`: the range query plus `attribute`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationQuery {
    pub range: RangeQuery,
    pub attribute: String,
}

impl CorrelationQuery {
    pub fn parse(query: &str) -> ServiceResult<Self> {
        let mut p = Params::parse(query);
        let range = RangeQuery::from_params(&mut p)?;
        let attribute = p.require("attribute")?;
        p.finish()?;
        Ok(CorrelationQuery { range, attribute })
    }
}

pub fn correlation(store: &Store, cq: &CorrelationQuery) -> ServiceResult<CorrelationPayload> {
    let q = &cq.range;
    let sel = select(store, q)?;
    let j = attribute_index(&sel.table, &cq.attribute)?;
    let payload = explanations_for(store, q, &sel)?;
    let group = sel.group();
    let mut points = Vec::new();
    for block in payload.rankers {
        for (row, &i) in block.rows.into_iter().zip(&sel.members) {
            points.push(CorrelationPoint {
                ranker_id: block.ranker_id.clone(),
                candidate_id: row.candidate_id,
                truth_rank: row.truth_rank,
                deviation: row.deviation,
                within_threshold: row.within_threshold,
                dot_size: row.dot_size,
                importance: row.importances[j],
                attribute_value: group.candidates[i].attributes[j],
            });
        }
    }
    Ok(CorrelationPayload {
        version: PAYLOAD_VERSION,
        dataset_id: q.dataset_id.clone(),
        query_id: sel.query_id,
        method: q.method,
        range: sel.range,
        attribute: cq.attribute.clone(),
        deviation_threshold: q.deviation_threshold,
        points,
    })
}

/// `/agreement?dataset=&ranker=&year=`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementQuery {
    pub dataset_id: String,
    pub ranker_id: String,
    pub query_id: QueryId,
}

impl AgreementQuery {
    pub fn parse(query: &str) -> ServiceResult<Self> {
        let mut p = Params::parse(query);
        let dataset_id = p.require("dataset")?;
        let query_id = p.require_parsed::<QueryId>("year")?;
        let mut rankers = crate::query::take_rankers(&mut p);
        p.finish()?;
        if rankers.len() != 1 {
            return Err(ServiceError::BadRequest("exactly one ranker is required".into()));
        }
        Ok(AgreementQuery {
            dataset_id,
            ranker_id: rankers.remove(0),
            query_id,
        })
    }
}

/// The stored agreement document, verbatim.
pub fn agreement(store: &Store, q: &AgreementQuery) -> ServiceResult<Vec<u8>> {
    let t = table(store, &q.dataset_id)?;
    if t.query(q.query_id).is_none() {
        return Err(ServiceError::NotFound(format!("year {} is not in dataset `{}`", q.query_id, q.dataset_id)));
    }
    check_rankers(store, &q.dataset_id, std::slice::from_ref(&q.ranker_id))?;
    let key = rankscope::store::ArtifactKey::agreement(&q.dataset_id, &q.ranker_id, q.query_id);
    store.get(&key).map_err(|e| match e {
        rankscope::Error::NotFound(_) => ServiceError::NotFound(format!(
            "no agreement report for ranker `{}` in year {} (run `agreement` first)",
            q.ranker_id, q.query_id
        )),
        other => other.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    Ranker,
    Range,
    Time,
}

/// `/compare`: the range query plus `mode` and the counterpart parameter
/// (`range2` or `lo2`/`hi2` for range mode, `year2` for time mode).
#[derive(Debug, Clone, PartialEq)]
pub struct CompareQuery {
    pub base: RangeQuery,
    pub mode: CompareMode,
    pub range2: Option<RankRange>,
    pub year2: Option<QueryId>,
}

impl CompareQuery {
    pub fn parse(query: &str) -> ServiceResult<Self> {
        let mut p = Params::parse(query);
        let mode = match p.require("mode")?.to_ascii_lowercase().as_str() {
            "ranker" => CompareMode::Ranker,
            "range" => CompareMode::Range,
            "time" => CompareMode::Time,
            other => {
                return Err(ServiceError::BadRequest(format!(
                    "invalid mode `{other}`; expected ranker, range or time"
                )))
            }
        };
        let base = RangeQuery::from_params(&mut p)?;
        let range2 = crate::query::take_range(&mut p, "range2", "lo2", "hi2")?;
        let year2 = p.take_parsed::<QueryId>("year2")?;
        p.finish()?;
        match mode {
            CompareMode::Range if range2.is_none() => return missing_counterpart("range", "`range2` or `lo2`/`hi2`"),
            CompareMode::Time if year2.is_none() => return missing_counterpart("time", "`year2`"),
            CompareMode::Ranker if range2.is_some() || year2.is_some() => {
                return Err(ServiceError::BadRequest("ranker mode takes no `range2`/`year2`".into()))
            }
            CompareMode::Range if year2.is_some() => {
                return Err(ServiceError::BadRequest("range mode takes no `year2`".into()))
            }
            CompareMode::Time if range2.is_some() => {
                return Err(ServiceError::BadRequest("time mode takes no `range2`".into()))
            }
            _ => {}
        }
        Ok(CompareQuery {
            base,
            mode,
            range2,
            year2,
        })
    }
}

fn missing_counterpart<T>(mode: &str, param: &str) -> ServiceResult<T> {
    Err(ServiceError::BadRequest(format!("{mode} mode needs {param}")))
}

#[derive(Debug, Serialize)]
pub struct CompareGroup {
    pub label: String,
    pub payload: ExplanationsPayload,
}

#[derive(Debug, Serialize)]
pub struct ComparePayload {
    pub version: u32,
    pub mode: CompareMode,
    pub groups: Vec<CompareGroup>,
}

pub fn compare(store: &Store, cq: &CompareQuery) -> ServiceResult<ComparePayload> {
    let base = &cq.base;
    let groups = match cq.mode {
        CompareMode::Ranker => base
            .rankers
            .iter()
            .map(|r| {
                let q = RangeQuery {
                    rankers: vec![r.clone()],
                    ..base.clone()
                };
                Ok(CompareGroup {
                    label: r.clone(),
                    payload: explanations(store, &q)?,
                })
            })
            .collect::<ServiceResult<Vec<_>>>()?,
        CompareMode::Range => {
            let second = RangeQuery {
                range: cq.range2,
                ..base.clone()
            };
            [base, &second]
                .into_iter()
                .map(|q| {
                    let payload = explanations(store, q)?;
                    Ok(CompareGroup {
                        label: payload.range.to_string(),
                        payload,
                    })
                })
                .collect::<ServiceResult<Vec<_>>>()?
        }
        CompareMode::Time => {
            let second = RangeQuery {
                query_id: cq.year2.expect("checked at parse"),
                ..base.clone()
            };
            [base, &second]
                .into_iter()
                .map(|q| {
                    Ok(CompareGroup {
                        label: q.query_id.to_string(),
                        payload: explanations(store, q)?,
                    })
                })
                .collect::<ServiceResult<Vec<_>>>()?
        }
    };
    Ok(ComparePayload {
        version: PAYLOAD_VERSION,
        mode: cq.mode,
        groups,
    })
}
