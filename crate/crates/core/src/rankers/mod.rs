//! Surrogate rankers: learned scoring functions that mimic a publisher's
//! scoring-and-ranking scheme, plus the trainers that fit them.
//!
//! Pointwise: [`mart`]. Pairwise: [`svm`], [`rankboost`]. Listwise:
//! [`lambdamart`], [`coordinate_ascent`], [`listnet`]. Metric-driven trainers
//! optimize NDCG@10.

pub mod coordinate_ascent;
mod data;
pub mod lambdamart;
pub mod listnet;
pub mod mart;
pub mod rankboost;
pub mod svm;
pub mod tree;

use std::cmp::Ordering;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::{QueryGroup, QueryId, RankingTable};
use crate::error::{Error, Result};

pub use coordinate_ascent::CoordinateAscentParams;
pub use data::{Standardization, TrainingSet};
pub use listnet::ListNetParams;
pub use rankboost::{RankBoostModel, RankBoostParams, Stump};
pub use svm::SvmParams;
pub use tree::{Ensemble, Node, RegressionTree, TreeParams};

pub const RANKER_FORMAT: &str = "rankscope-ranker";
pub const RANKER_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "MART")]
    Mart,
    #[serde(rename = "LambdaMART")]
    LambdaMart,
    RankBoost,
    #[serde(rename = "RankingSVM")]
    RankingSvm,
    CoordinateAscent,
    ListNet,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Mart,
        Algorithm::LambdaMart,
        Algorithm::RankBoost,
        Algorithm::RankingSvm,
        Algorithm::CoordinateAscent,
        Algorithm::ListNet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mart => "MART",
            Algorithm::LambdaMart => "LambdaMART",
            Algorithm::RankBoost => "RankBoost",
            Algorithm::RankingSvm => "RankingSVM",
            Algorithm::CoordinateAscent => "CoordinateAscent",
            Algorithm::ListNet => "ListNet",
        }
    }

    pub fn default_hyperparameters(self) -> Hyperparameters {
        match self {
            Algorithm::Mart => Hyperparameters::Mart(TreeParams::default()),
            Algorithm::LambdaMart => Hyperparameters::LambdaMart(TreeParams::default()),
            Algorithm::RankBoost => Hyperparameters::RankBoost(RankBoostParams::default()),
            Algorithm::RankingSvm => Hyperparameters::RankingSvm(SvmParams::default()),
            Algorithm::CoordinateAscent => {
                Hyperparameters::CoordinateAscent(CoordinateAscentParams::default())
            }
            Algorithm::ListNet => Hyperparameters::ListNet(ListNetParams::default()),
        }
    }

    pub fn training_metric(self) -> TrainingMetric {
        match self {
            Algorithm::LambdaMart | Algorithm::CoordinateAscent => TrainingMetric::Ndcg10,
            _ => TrainingMetric::None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().to_ascii_lowercase() == lower)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown algorithm '{s}' (expected one of MART, LambdaMART, RankBoost, RankingSVM, CoordinateAscent, ListNet)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainingMetric {
    #[serde(rename = "NDCG@10")]
    Ndcg10,
    #[serde(rename = "none")]
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm")]
pub enum Hyperparameters {
    #[serde(rename = "MART")]
    Mart(TreeParams),
    #[serde(rename = "LambdaMART")]
    LambdaMart(TreeParams),
    RankBoost(RankBoostParams),
    #[serde(rename = "RankingSVM")]
    RankingSvm(SvmParams),
    CoordinateAscent(CoordinateAscentParams),
    ListNet(ListNetParams),
}

impl Hyperparameters {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Hyperparameters::Mart(_) => Algorithm::Mart,
            Hyperparameters::LambdaMart(_) => Algorithm::LambdaMart,
            Hyperparameters::RankBoost(_) => Algorithm::RankBoost,
            Hyperparameters::RankingSvm(_) => Algorithm::RankingSvm,
            Hyperparameters::CoordinateAscent(_) => Algorithm::CoordinateAscent,
            Hyperparameters::ListNet(_) => Algorithm::ListNet,
        }
    }
}

/// Linear scorer `w · standardize(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standardization: Option<Standardization>,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>) -> Self {
        LinearModel {
            weights,
            standardization: None,
        }
    }

    fn score_row(&self, row: &[f64]) -> f64 {
        match &self.standardization {
            None => self.weights.iter().zip(row).map(|(w, x)| w * x).sum(),
            Some(s) => self
                .weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * s.apply(j, row[j]))
                .sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearModel),
    TreeEnsemble(Ensemble),
    WeakRankers(RankBoostModel),
}

impl Model {
    fn score_row(&self, row: &[f64]) -> f64 {
        match self {
            Model::Linear(m) => m.score_row(row),
            Model::TreeEnsemble(m) => m.predict(row),
            Model::WeakRankers(m) => m.score_row(row),
        }
    }

    fn validate(&self, p: usize) -> Result<()> {
        let bad = |m: String| Err(Error::ModelFormat(m));
        match self {
            Model::Linear(m) => {
                if m.weights.len() != p {
                    return bad(format!("{} weights for {p} attributes", m.weights.len()));
                }
                if m.weights.iter().any(|w| !w.is_finite()) {
                    return bad("non-finite weight".into());
                }
                if let Some(s) = &m.standardization {
                    s.validate(p)?;
                }
                Ok(())
            }
            Model::TreeEnsemble(e) => e.validate(p),
            Model::WeakRankers(m) => m.validate(p),
        }
    }
}

/// A fitted surrogate ranker. Scoring is a pure function of the model and one
/// attribute row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedRanker {
    pub ranker_id: String,
    pub algorithm: Algorithm,
    pub hyperparameters: Hyperparameters,
    pub seed: u64,
    pub training_metric: TrainingMetric,
    pub n_attributes: usize,
    pub model: Model,
}

#[derive(Serialize, Deserialize)]
struct RankerDocument {
    format: String,
    version: u32,
    #[serde(flatten)]
    ranker: TrainedRanker,
}

impl TrainedRanker {
    /// Wraps a hand-built model, e.g. a known linear scorer used as an oracle.
    pub fn from_model(ranker_id: &str, algorithm: Algorithm, n_attributes: usize, model: Model) -> Result<Self> {
        model.validate(n_attributes)?;
        Ok(TrainedRanker {
            ranker_id: ranker_id.to_string(),
            algorithm,
            hyperparameters: algorithm.default_hyperparameters(),
            seed: 0,
            training_metric: algorithm.training_metric(),
            n_attributes,
            model,
        })
    }

    pub fn linear(ranker_id: &str, weights: Vec<f64>) -> Self {
        let p = weights.len();
        TrainedRanker::from_model(ranker_id, Algorithm::RankingSvm, p, Model::Linear(LinearModel::new(weights)))
            .expect("finite weights")
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.n_attributes {
            return Err(Error::Dimension {
                expected: self.n_attributes,
                actual,
            });
        }
        Ok(())
    }

    pub fn score_row(&self, row: &[f64]) -> Result<f64> {
        self.check_dim(row.len())?;
        Ok(self.model.score_row(row))
    }

    /// One score per row.
    pub fn score<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.score_row(r.as_ref())).collect()
    }

    pub fn score_query(&self, group: &QueryGroup) -> Result<Vec<f64>> {
        self.score(&group.rows())
    }

    /// Scores and ranks one query.
    pub fn learned_ranking(&self, group: &QueryGroup) -> Result<LearnedRanking> {
        let scores = self.score_query(group)?;
        let proxy_ranks = rank(&scores, &group.candidate_ids())?;
        Ok(LearnedRanking {
            version: RANKER_VERSION,
            ranker_id: self.ranker_id.clone(),
            query_id: group.query_id,
            candidate_ids: group.candidates.iter().map(|c| c.candidate_id.clone()).collect(),
            scores,
            proxy_ranks,
        })
    }

    pub fn to_document(&self) -> Result<String> {
        let doc = RankerDocument {
            format: RANKER_FORMAT.into(),
            version: RANKER_VERSION,
            ranker: self.clone(),
        };
        let mut s = serde_json::to_string_pretty(&doc)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_document(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        match value.get("format").and_then(|f| f.as_str()) {
            Some(RANKER_FORMAT) => {}
            other => {
                return Err(Error::ModelFormat(format!(
                    "expected format '{RANKER_FORMAT}', found {other:?}"
                )))
            }
        }
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(RANKER_VERSION) => {}
            other => {
                return Err(Error::ModelFormat(format!(
                    "unsupported ranker version {other:?} (this build reads version {RANKER_VERSION})"
                )))
            }
        }
        let doc: RankerDocument = serde_json::from_value(value)?;
        let r = doc.ranker;
        if r.hyperparameters.algorithm() != r.algorithm {
            return Err(Error::ModelFormat(format!(
                "hyperparameters are for {} but algorithm is {}",
                r.hyperparameters.algorithm(),
                r.algorithm
            )));
        }
        if r.n_attributes == 0 {
            return Err(Error::ModelFormat("model has no attributes".into()));
        }
        r.model.validate(r.n_attributes)?;
        Ok(r)
    }
}

pub fn save_ranker(ranker: &TrainedRanker, path: &Path) -> Result<()> {
    std::fs::write(path, ranker.to_document()?).map_err(|e| Error::io(path, e))
}

pub fn load_ranker(path: &Path) -> Result<TrainedRanker> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    TrainedRanker::from_document(&s)
}

/// Scores and proxy ranks of one ranker on one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedRanking {
    pub version: u32,
    pub ranker_id: String,
    pub query_id: QueryId,
    pub candidate_ids: Vec<String>,
    pub scores: Vec<f64>,
    pub proxy_ranks: Vec<usize>,
}

/// Ranks by descending score, 1-based. Equal scores are ordered by ascending
/// candidate id.
pub fn rank<S: AsRef<str>>(scores: &[f64], candidate_ids: &[S]) -> Result<Vec<usize>> {
    if scores.len() != candidate_ids.len() {
        return Err(Error::InvalidRanking(format!(
            "{} scores for {} candidates",
            scores.len(),
            candidate_ids.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::InvalidRanking(format!(
            "NaN score for candidate '{}'",
            candidate_ids[i].as_ref()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .partial_cmp(&scores[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| candidate_ids[a].as_ref().cmp(candidate_ids[b].as_ref()))
    });
    let mut ranks = vec![0; scores.len()];
    for (pos, i) in order.into_iter().enumerate() {
        ranks[i] = pos + 1;
    }
    Ok(ranks)
}

/// Trains one ranker of the algorithm implied by `hyperparameters`.
pub fn train(
    ranker_id: &str,
    table: &RankingTable,
    hyperparameters: &Hyperparameters,
    seed: u64,
) -> Result<TrainedRanker> {
    let set = TrainingSet::from_table(table)?;
    let model = match hyperparameters {
        Hyperparameters::Mart(hp) => Model::TreeEnsemble(mart::fit(&set, hp)?),
        Hyperparameters::LambdaMart(hp) => Model::TreeEnsemble(lambdamart::fit(&set, hp)?),
        Hyperparameters::RankBoost(hp) => Model::WeakRankers(rankboost::fit(&set, hp)?),
        Hyperparameters::RankingSvm(hp) => Model::Linear(svm::fit(&set, hp, seed)?),
        Hyperparameters::CoordinateAscent(hp) => {
            Model::Linear(coordinate_ascent::fit(&set, hp, seed)?.0)
        }
        Hyperparameters::ListNet(hp) => Model::Linear(listnet::fit(&set, hp, seed)?),
    };
    let algorithm = hyperparameters.algorithm();
    Ok(TrainedRanker {
        ranker_id: ranker_id.to_string(),
        algorithm,
        hyperparameters: hyperparameters.clone(),
        seed,
        training_metric: algorithm.training_metric(),
        n_attributes: table.n_attributes(),
        model,
    })
}
