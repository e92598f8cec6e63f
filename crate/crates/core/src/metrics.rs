//! Goodness of fit between a learned ranking and the published one: item-wise
//! rank deviation plus NDCG@k, P@k, average precision and Kendall's tau.
//!
//! Rank vectors are 1-based and aligned by candidate: `truth[i]` and
//! `learned[i]` are the two ranks of candidate `i`.
//!
//! Conventions: NDCG uses linear gain (`gain(l) = l`) because labels are
//! `n_q - rank` and can reach several hundred. P@k and AP treat a candidate as
//! relevant when its ground-truth rank is within the top `k` (10 for reports).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dataset::QueryId;
use crate::error::{Error, Result};

/// Relevance cut-off used for reports.
pub const REPORT_K: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gain {
    #[default]
    Linear,
    /// `2^l - 1`, the usual IR convention. Overflows to infinity for large labels.
    Exponential,
}

impl Gain {
    pub fn apply(self, label: u32) -> f64 {
        match self {
            Gain::Linear => f64::from(label),
            Gain::Exponential => 2f64.powi(label as i32) - 1.0,
        }
    }
}

/// `1 / log2(position + 1)` for a 1-based position.
pub fn discount(position: usize) -> f64 {
    1.0 / ((position + 1) as f64).log2()
}

fn check_permutation(ranks: &[usize], what: &str) -> Result<()> {
    let n = ranks.len();
    let mut seen = vec![false; n];
    for &r in ranks {
        if r == 0 || r > n || seen[r - 1] {
            return Err(Error::InvalidRanking(format!(
                "{what} is not a permutation of 1..{n}"
            )));
        }
        seen[r - 1] = true;
    }
    Ok(())
}

fn check_pair(truth: &[usize], learned: &[usize]) -> Result<()> {
    if truth.len() != learned.len() {
        return Err(Error::InvalidRanking(format!(
            "length mismatch: truth has {} entries, learned has {}",
            truth.len(),
            learned.len()
        )));
    }
    check_permutation(truth, "ground-truth ranking")?;
    check_permutation(learned, "learned ranking")
}

/// Converts per-candidate ranks into the candidate order (best first).
pub fn ranks_to_order(ranks: &[usize]) -> Result<Vec<usize>> {
    check_permutation(ranks, "ranking")?;
    let mut order = vec![0; ranks.len()];
    for (i, &r) in ranks.iter().enumerate() {
        order[r - 1] = i;
    }
    Ok(order)
}

/// `|truth_i - learned_i|` per candidate. Direction is discarded.
pub fn rank_deviation(truth: &[usize], learned: &[usize]) -> Result<Vec<usize>> {
    check_pair(truth, learned)?;
    Ok(truth.iter().zip(learned).map(|(&a, &b)| a.abs_diff(b)).collect())
}

fn dcg(labels: &[u32], order: impl Iterator<Item = usize>, k: usize, gain: Gain) -> f64 {
    order
        .take(k)
        .enumerate()
        .map(|(pos, i)| gain.apply(labels[i]) * discount(pos + 1))
        .sum()
}

/// Ideal DCG@k: labels sorted in non-increasing order.
pub fn ideal_dcg(labels: &[u32], k: usize, gain: Gain) -> f64 {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
        .iter()
        .take(k)
        .enumerate()
        .map(|(pos, &l)| gain.apply(l) * discount(pos + 1))
        .sum()
}

/// NDCG@k of `order` (candidate indices, best first) against `labels`.
/// All-zero labels give 1.
pub fn ndcg_at_k(labels: &[u32], order: &[usize], k: usize) -> Result<f64> {
    ndcg_at_k_with(labels, order, k, Gain::Linear)
}

pub fn ndcg_at_k_with(labels: &[u32], order: &[usize], k: usize, gain: Gain) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidRanking("k must be at least 1".into()));
    }
    if order.len() != labels.len() {
        return Err(Error::InvalidRanking(format!(
            "order has {} entries for {} labels",
            order.len(),
            labels.len()
        )));
    }
    let mut seen = vec![false; order.len()];
    for &i in order {
        if i >= order.len() || seen[i] {
            return Err(Error::InvalidRanking("order is not a permutation".into()));
        }
        seen[i] = true;
    }
    let ideal = ideal_dcg(labels, k, gain);
    if ideal == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg(labels, order.iter().copied(), k, gain) / ideal)
}

/// Fraction of the learned top-k whose ground-truth rank is also within the top k.
pub fn precision_at_k(truth: &[usize], learned: &[usize], k: usize) -> Result<f64> {
    check_pair(truth, learned)?;
    if k == 0 || k > truth.len() {
        return Err(Error::InvalidRanking(format!(
            "k = {k} outside 1..={}",
            truth.len()
        )));
    }
    let hits = truth
        .iter()
        .zip(learned)
        .filter(|&(&t, &l)| t <= k && l <= k)
        .count();
    Ok(hits as f64 / k as f64)
}

/// Average precision of the learned order, where relevant means ground-truth
/// rank ≤ `relevant_k`. Normalized by the number of relevant candidates.
pub fn average_precision(truth: &[usize], learned: &[usize], relevant_k: usize) -> Result<f64> {
    check_pair(truth, learned)?;
    if relevant_k == 0 {
        return Err(Error::InvalidRanking("relevance cut-off must be at least 1".into()));
    }
    let order = ranks_to_order(learned)?;
    let n_relevant = relevant_k.min(truth.len());
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, &i) in order.iter().enumerate() {
        if truth[i] <= relevant_k {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
            if hits == n_relevant {
                break;
            }
        }
    }
    Ok(sum / n_relevant as f64)
}

/// Mean of per-query average precisions.
pub fn mean_average_precision(queries: &[(&[usize], &[usize])], relevant_k: usize) -> Result<f64> {
    if queries.is_empty() {
        return Err(Error::InvalidRanking("no queries".into()));
    }
    let mut total = 0.0;
    for (truth, learned) in queries {
        total += average_precision(truth, learned, relevant_k)?;
    }
    Ok(total / queries.len() as f64)
}

/// Kendall's tau-a between two rankings of the same candidates.
pub fn kendall_tau(truth: &[usize], learned: &[usize]) -> Result<f64> {
    check_pair(truth, learned)?;
    let n = truth.len();
    if n < 2 {
        return Ok(1.0);
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let a = (truth[i] as i64 - truth[j] as i64).signum();
            let b = (learned[i] as i64 - learned[j] as i64).signum();
            if a * b > 0 {
                concordant += 1;
            } else if a * b < 0 {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / pairs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConventions {
    pub gain: Gain,
    /// Candidates with ground-truth rank ≤ this count as relevant for P@k and AP.
    pub relevant_top_k: usize,
    /// The cut-off actually used (`min(10, n_q)`).
    pub k: usize,
}

/// Item-wise and summary goodness of fit of one ranker on one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub version: u32,
    pub ranker_id: String,
    pub query_id: QueryId,
    pub candidate_ids: Vec<String>,
    pub truth_ranks: Vec<usize>,
    pub learned_ranks: Vec<usize>,
    pub deviations: Vec<usize>,
    pub ndcg_at_10: f64,
    pub precision_at_10: f64,
    pub mean_average_precision: f64,
    pub kendall_tau: f64,
    pub conventions: MetricConventions,
}

pub const FIT_REPORT_VERSION: u32 = 1;

impl FitReport {
    pub fn compute(
        ranker_id: &str,
        query_id: QueryId,
        candidate_ids: Vec<String>,
        truth_ranks: &[usize],
        labels: &[u32],
        learned_ranks: &[usize],
    ) -> Result<Self> {
        let deviations = rank_deviation(truth_ranks, learned_ranks)?;
        let k = REPORT_K.min(truth_ranks.len());
        let order = ranks_to_order(learned_ranks)?;
        Ok(FitReport {
            version: FIT_REPORT_VERSION,
            ranker_id: ranker_id.to_string(),
            query_id,
            candidate_ids,
            truth_ranks: truth_ranks.to_vec(),
            learned_ranks: learned_ranks.to_vec(),
            deviations,
            ndcg_at_10: ndcg_at_k(labels, &order, REPORT_K)?,
            precision_at_10: precision_at_k(truth_ranks, learned_ranks, k)?,
            mean_average_precision: average_precision(truth_ranks, learned_ranks, REPORT_K)?,
            kendall_tau: kendall_tau(truth_ranks, learned_ranks)?,
            conventions: MetricConventions {
                gain: Gain::Linear,
                relevant_top_k: REPORT_K,
                k,
            },
        })
    }
}

/// One row of the ranker × metric table, averaged over queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub ranker_id: String,
    pub ndcg_at_10: f64,
    pub precision_at_10: f64,
    pub mean_average_precision: f64,
    pub queries: usize,
    /// Median LIME/ICE agreement, when available.
    pub agreement_median: Option<f64>,
}

impl ReportRow {
    pub fn from_fits(ranker_id: &str, fits: &[&FitReport]) -> Option<Self> {
        if fits.is_empty() {
            return None;
        }
        let n = fits.len() as f64;
        Some(ReportRow {
            ranker_id: ranker_id.to_string(),
            ndcg_at_10: fits.iter().map(|f| f.ndcg_at_10).sum::<f64>() / n,
            precision_at_10: fits.iter().map(|f| f.precision_at_10).sum::<f64>() / n,
            mean_average_precision: fits.iter().map(|f| f.mean_average_precision).sum::<f64>() / n,
            queries: fits.len(),
            agreement_median: None,
        })
    }
}

/// Plain-text table: one row per ranker with NDCG@10 and P@10, then MAP and the
/// agreement median.
pub fn format_report_table(dataset_id: &str, rows: &[ReportRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.ranker_id.len())
        .chain(std::iter::once("algorithm".len()))
        .max()
        .unwrap_or(9);
    let mut s = String::new();
    writeln!(s, "ranking data: {dataset_id}").unwrap();
    writeln!(
        s,
        "{:<width$} {:>7} {:>7} {:>7} {:>9}",
        "algorithm", "NDCG@10", "P@10", "MAP", "agreement"
    )
    .unwrap();
    for r in rows {
        let agreement = r
            .agreement_median
            .map(|m| format!("{m:.2}"))
            .unwrap_or_else(|| "-".into());
        writeln!(
            s,
            "{:<width$} {:>7.2} {:>7.2} {:>7.2} {:>9}",
            r.ranker_id, r.ndcg_at_10, r.precision_at_10, r.mean_average_precision, agreement
        )
        .unwrap();
    }
    writeln!(
        s,
        "conventions: linear gain; relevant = ground-truth rank <= {REPORT_K}; values averaged over queries"
    )
    .unwrap();
    s
}
