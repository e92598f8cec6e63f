//! Local attribute-importance explanations of trained rankers.
//!
//! Two per-instance explainers share one output schema: [`lime`] fits a
//! weighted linear surrogate to ranking scores around the instance, [`ice`]
//! measures how much the score moves when one attribute sweeps its background
//! quantiles. [`explain_range`] runs either over the candidates of a
//! ground-truth rank range and [`normalize_importance`] maps the result jointly
//! onto `[0, 1]`.

pub mod ice;
pub mod lime;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{QueryGroup, QueryId, RankingTable};
use crate::error::{Error, Result};
use crate::rankers::{Standardization, TrainedRanker};

pub use ice::{ice_explain, ice_impact, IceExplanation};
pub use lime::{lime_explain, LimeExplanation};

pub const EXPLANATION_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "LIME")]
    Lime,
    #[serde(rename = "ICE")]
    Ice,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Lime, Method::Ice];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lime => "LIME",
            Method::Ice => "ICE",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lime" => Ok(Method::Lime),
            "ice" => Ok(Method::Ice),
            _ => Err(Error::Config(format!("unknown explanation method '{s}' (expected LIME or ICE)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainConfig {
    /// LIME samples per instance.
    pub samples: usize,
    /// LIME kernel width; `0.75 √p` when unset.
    pub kernel_width: Option<f64>,
    pub ridge: f64,
    /// ICE grid points, placed at equally spaced background quantiles
    /// between `grid_low` and `grid_high`.
    pub grid_size: usize,
    pub grid_low: f64,
    pub grid_high: f64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        ExplainConfig {
            samples: 500,
            kernel_width: None,
            ridge: 1e-3,
            grid_size: 10,
            grid_low: 0.05,
            grid_high: 0.95,
        }
    }
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.samples >= 2
            && self.kernel_width.is_none_or(|k| k.is_finite() && k > 0.0)
            && self.ridge.is_finite()
            && self.ridge >= 0.0
            && self.grid_size >= 1
            && (0.0..=1.0).contains(&self.grid_low)
            && (0.0..=1.0).contains(&self.grid_high)
            && self.grid_low <= self.grid_high;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid explanation settings: {self:?}")))
        }
    }
}

/// Per-attribute statistics of the background data: every row of the table
/// across all queries.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    pub dataset_id: String,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Each column sorted ascending, for quantiles.
    pub sorted: Vec<Vec<f64>>,
}

impl Background {
    pub fn from_table(table: &RankingTable) -> Self {
        let rows: Vec<&[f64]> = table.all_rows().collect();
        let mut bg = Self::from_rows(rows.iter().copied(), table.n_attributes());
        bg.dataset_id = table.dataset_id.clone();
        bg
    }

    pub fn from_rows<'a>(rows: impl IntoIterator<Item = &'a [f64]> + Clone, p: usize) -> Self {
        let stats = Standardization::fit(rows.clone(), p);
        let mut sorted = vec![Vec::new(); p];
        for row in rows {
            for (col, &v) in sorted.iter_mut().zip(row) {
                col.push(v);
            }
        }
        sorted.iter_mut().for_each(|c| c.sort_by(f64::total_cmp));
        Background {
            dataset_id: String::new(),
            mean: stats.mean,
            std: stats.std,
            sorted,
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.mean.len()
    }

    pub fn z_score(&self, j: usize, x: f64) -> f64 {
        if self.std[j] > 0.0 {
            (x - self.mean[j]) / self.std[j]
        } else {
            0.0
        }
    }
}

/// Settings that produced an explanation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplingMeta {
    Lime {
        samples: usize,
        kernel_width: f64,
        ridge: f64,
    },
    Ice {
        grid_size: usize,
        grid_low: f64,
        grid_high: f64,
    },
}

/// Raw per-candidate importances for one ranker, method and query. Rows follow
/// the query's candidate order restricted to the explained rank range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMatrix {
    pub version: u32,
    pub dataset_id: String,
    pub ranker_id: String,
    pub query_id: QueryId,
    pub method: Method,
    pub attribute_names: Vec<String>,
    pub candidate_ids: Vec<String>,
    pub truth_ranks: Vec<usize>,
    /// `n × p`, signed for LIME, non-negative for ICE.
    pub raw: Vec<Vec<f64>>,
    pub seed: u64,
    pub sampling_meta: SamplingMeta,
    /// Weighted R² of each LIME surrogate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<Vec<f64>>,
    /// Attributes with zero background spread: held fixed (LIME) or given
    /// impact 0 (ICE).
    #[serde(default)]
    pub constant_attributes: Vec<usize>,
}

impl ExplanationMatrix {
    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    /// Copy with every entry replaced by its absolute value.
    pub fn magnitudes(&self) -> ExplanationMatrix {
        let mut m = self.clone();
        m.raw.iter_mut().flatten().for_each(|v| *v = v.abs());
        m
    }

    pub fn to_document(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_document(s: &str) -> Result<Self> {
        let m: ExplanationMatrix = serde_json::from_str(s)?;
        if m.version != EXPLANATION_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported explanation version {} (expected {EXPLANATION_VERSION})",
                m.version
            )));
        }
        let p = m.n_attributes();
        let n = m.candidate_ids.len();
        if m.truth_ranks.len() != n || m.raw.len() != n || m.raw.iter().any(|r| r.len() != p) {
            return Err(Error::ModelFormat("explanation matrix shape is inconsistent".into()));
        }
        Ok(m)
    }
}

fn check_range(range: (usize, usize), n: usize) -> Result<()> {
    let (lo, hi) = range;
    if lo < 1 || lo > hi || hi > n {
        return Err(Error::Explain(format!(
            "rank range ({lo}, {hi}) is empty or outside 1..={n}"
        )));
    }
    Ok(())
}

/// Explains every candidate whose ground-truth rank lies in `range`
/// (inclusive). Each instance draws from its own stream `seed ^ index`, so
/// parallel and sequential runs agree.
pub fn explain_range(
    ranker: &TrainedRanker,
    group: &QueryGroup,
    attribute_names: &[String],
    method: Method,
    range: (usize, usize),
    background: &Background,
    cfg: &ExplainConfig,
    seed: u64,
) -> Result<ExplanationMatrix> {
    cfg.validate()?;
    check_range(range, group.len())?;
    let p = background.n_attributes();
    if attribute_names.len() != p {
        return Err(Error::Dimension {
            expected: p,
            actual: attribute_names.len(),
        });
    }
    let selected: Vec<usize> = (0..group.len())
        .filter(|&i| {
            let r = group.candidates[i].ground_truth_rank;
            range.0 <= r && r <= range.1
        })
        .collect();
    if selected.is_empty() {
        return Err(Error::Explain(format!("no candidates in rank range {range:?}")));
    }

    let (raw, fidelity, constant_attributes, sampling_meta) = match method {
        Method::Lime => {
            let rows = selected
                .par_iter()
                .map(|&i| {
                    lime_explain(
                        ranker,
                        &group.candidates[i].attributes,
                        background,
                        cfg,
                        seed ^ i as u64,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let constant = rows.first().map(|e| e.fixed.clone()).unwrap_or_default();
            let fidelity = rows.iter().map(|e| e.r_squared).collect();
            let raw = rows.into_iter().map(|e| e.coefficients).collect();
            let meta = SamplingMeta::Lime {
                samples: cfg.samples,
                kernel_width: lime::kernel_width(cfg, p),
                ridge: cfg.ridge,
            };
            (raw, Some(fidelity), constant, meta)
        }
        Method::Ice => {
            let rows = selected
                .par_iter()
                .map(|&i| ice_explain(ranker, &group.candidates[i].attributes, background, cfg))
                .collect::<Result<Vec<_>>>()?;
            let constant = rows.first().map(|e| e.constant.clone()).unwrap_or_default();
            let raw = rows.into_iter().map(|e| e.impacts).collect();
            let meta = SamplingMeta::Ice {
                grid_size: cfg.grid_size,
                grid_low: cfg.grid_low,
                grid_high: cfg.grid_high,
            };
            (raw, None, constant, meta)
        }
    };

    Ok(ExplanationMatrix {
        version: EXPLANATION_VERSION,
        dataset_id: background.dataset_id.clone(),
        ranker_id: ranker.ranker_id.clone(),
        query_id: group.query_id,
        method,
        attribute_names: attribute_names.to_vec(),
        candidate_ids: selected.iter().map(|&i| group.candidates[i].candidate_id.clone()).collect(),
        truth_ranks: selected.iter().map(|&i| group.candidates[i].ground_truth_rank).collect(),
        raw,
        seed,
        sampling_meta,
        fidelity,
        constant_attributes,
    })
}

/// Joint min-max scaling of every entry onto `[0, 1]`. A constant (or empty)
/// matrix maps to 0.5 everywhere.
pub fn normalize_values(raw: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let (lo, hi) = raw
        .iter()
        .flatten()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    raw.iter()
        .map(|row| {
            row.iter()
                .map(|&v| if span > 0.0 { (v - lo) / span } else { 0.5 })
                .collect()
        })
        .collect()
}

pub fn column_means(values: &[Vec<f64>], p: usize) -> Vec<f64> {
    let mut means = vec![0.0; p];
    for row in values {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    if !values.is_empty() {
        means.iter_mut().for_each(|m| *m /= values.len() as f64);
    }
    means
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedExplanation {
    pub ranker_id: String,
    pub query_id: QueryId,
    pub method: Method,
    pub range: (usize, usize),
    pub attribute_names: Vec<String>,
    pub candidate_ids: Vec<String>,
    pub truth_ranks: Vec<usize>,
    /// `m × p` in `[0, 1]`.
    pub values: Vec<Vec<f64>>,
    /// Column means of `values`.
    pub means: Vec<f64>,
}

/// Restricts `matrix` to candidates with ground-truth rank in `range` and
/// min-max scales the remaining entries jointly.
pub fn normalize_importance(matrix: &ExplanationMatrix, range: (usize, usize)) -> Result<NormalizedExplanation> {
    let keep: Vec<usize> = (0..matrix.truth_ranks.len())
        .filter(|&i| range.0 <= matrix.truth_ranks[i] && matrix.truth_ranks[i] <= range.1)
        .collect();
    let restricted: Vec<Vec<f64>> = keep.iter().map(|&i| matrix.raw[i].clone()).collect();
    let values = normalize_values(&restricted);
    let means = column_means(&values, matrix.n_attributes());
    Ok(NormalizedExplanation {
        ranker_id: matrix.ranker_id.clone(),
        query_id: matrix.query_id,
        method: matrix.method,
        range,
        attribute_names: matrix.attribute_names.clone(),
        candidate_ids: keep.iter().map(|&i| matrix.candidate_ids[i].clone()).collect(),
        truth_ranks: keep.iter().map(|&i| matrix.truth_ranks[i]).collect(),
        values,
        means,
    })
}

/// Attribute indices by descending mean, ties by ascending index.
pub fn order_by_means(means: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..means.len()).collect();
    order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
    order
}

pub fn attribute_order(norm: &NormalizedExplanation) -> Vec<usize> {
    order_by_means(&norm.means)
}
