//! RankBoost with threshold weak rankers `h(x) = 1[x_f > θ]` over a
//! distribution on within-query crucial pairs.
//!
//! Each round picks the weak ranker with the largest `|r|`; a negative `r`
//! gives a negative weight, which is how attributes that hurt the rank enter
//! the model.

use serde::{Deserialize, Serialize};

use super::data::TrainingSet;
use crate::error::{Error, Result};

/// `r` is clamped to `±(1 - R_CLAMP)` so a perfectly separating weak ranker
/// gets a large but finite weight.
pub const R_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankBoostParams {
    pub rounds: usize,
    /// Candidate thresholds per feature, taken at evenly spaced quantiles of the
    /// training values (deciles by default).
    pub thresholds: usize,
}

impl Default for RankBoostParams {
    fn default() -> Self {
        RankBoostParams {
            rounds: 300,
            thresholds: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBoostModel {
    pub stumps: Vec<Stump>,
}

impl RankBoostModel {
    pub fn score_row(&self, row: &[f64]) -> f64 {
        self.stumps
            .iter()
            .filter(|s| row[s.feature] > s.threshold)
            .map(|s| s.alpha)
            .sum()
    }

    pub(crate) fn validate(&self, p: usize) -> Result<()> {
        for s in &self.stumps {
            if s.feature >= p || s.threshold.is_nan() || !s.alpha.is_finite() {
                return Err(Error::ModelFormat(format!(
                    "invalid weak ranker on feature {}",
                    s.feature
                )));
            }
        }
        Ok(())
    }
}

/// Candidate thresholds for one feature: lower quantiles at `k / count` for
/// `k = 0..count`, deduplicated.
pub fn candidate_thresholds(values: &[f64], count: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out: Vec<f64> = (0..count)
        .map(|k| sorted[(k * (n - 1)) / count])
        .collect();
    out.dedup();
    out
}

/// `α = ½ ln((1 + r) / (1 - r))` with `r` clamped away from ±1.
pub fn alpha_for(r: f64) -> f64 {
    let r = r.clamp(-1.0 + R_CLAMP, 1.0 - R_CLAMP);
    0.5 * ((1.0 + r) / (1.0 - r)).ln()
}

/// A weak-ranker dictionary entry with its outputs on every training row.
struct Candidate {
    feature: usize,
    threshold: f64,
    fires: Vec<bool>,
}

pub fn fit(set: &TrainingSet, hp: &RankBoostParams) -> Result<RankBoostModel> {
    if hp.thresholds == 0 {
        return Err(Error::Config("thresholds must be at least 1".into()));
    }
    set.require_pairs()?;
    let rows: Vec<&[f64]> = set.rows().collect();
    let n = rows.len();

    // crucial pairs as global row indices (better, worse)
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut offset = 0usize;
    for q in &set.queries {
        pairs.extend(
            q.pairs()
                .map(|(i, j)| ((offset + i) as u32, (offset + j) as u32)),
        );
        offset += q.len();
    }

    let mut dictionary = Vec::new();
    for f in 0..set.n_attributes {
        let column: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        for threshold in candidate_thresholds(&column, hp.thresholds) {
            dictionary.push(Candidate {
                feature: f,
                threshold,
                fires: column.iter().map(|&x| x > threshold).collect(),
            });
        }
    }

    let mut dist = vec![1.0 / pairs.len() as f64; pairs.len()];
    let mut potential = vec![0.0; n];
    let mut stumps = Vec::with_capacity(hp.rounds);
    for round in 0..hp.rounds {
        // r(h) = Σ D(i,j) (h(x_i) - h(x_j)) = Σ_rows π(row) h(row)
        potential.iter_mut().for_each(|p| *p = 0.0);
        for (&(i, j), &d) in pairs.iter().zip(&dist) {
            potential[i as usize] += d;
            potential[j as usize] -= d;
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, c) in dictionary.iter().enumerate() {
            let r: f64 = c
                .fires
                .iter()
                .zip(&potential)
                .filter(|(&h, _)| h)
                .map(|(_, &p)| p)
                .sum();
            if best.is_none_or(|(_, b)| r.abs() > b.abs()) {
                best = Some((k, r));
            }
        }
        let Some((k, r)) = best else { break };
        if r == 0.0 {
            log::debug!("rankboost: no informative weak ranker at round {round}; stopping");
            break;
        }
        let c = &dictionary[k];
        let alpha = alpha_for(r);
        let mut total = 0.0;
        for (&(i, j), d) in pairs.iter().zip(dist.iter_mut()) {
            let hi = f64::from(u8::from(c.fires[i as usize]));
            let hj = f64::from(u8::from(c.fires[j as usize]));
            *d *= (alpha * (hj - hi)).exp();
            total += *d;
        }
        dist.iter_mut().for_each(|d| *d /= total);
        stumps.push(Stump {
            feature: c.feature,
            threshold: c.threshold,
            alpha,
        });
    }
    Ok(RankBoostModel { stumps })
}
