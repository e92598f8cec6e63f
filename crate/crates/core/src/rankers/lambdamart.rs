//! LambdaMART: the MART tree machinery driven by lambda gradients that weight
//! each misordered pair by the NDCG@10 change of swapping it.

use super::data::{TrainQuery, TrainingSet};
use super::rank;
use super::tree::{fit_tree, Ensemble, SortedColumns, TreeParams};
use crate::error::{Error, Result};
use crate::metrics::{discount, ideal_dcg, Gain};

const SIGMA: f64 = 1.0;
const TRUNCATION: usize = 10;

fn truncated_discount(position: usize) -> f64 {
    if position <= TRUNCATION {
        discount(position)
    } else {
        0.0
    }
}

/// |ΔNDCG@10| of swapping two documents at 1-based `positions` with `labels`.
pub fn delta_ndcg(labels: (u32, u32), positions: (usize, usize), ideal: f64) -> f64 {
    if ideal == 0.0 {
        return 0.0;
    }
    let gain_diff = f64::from(labels.0) - f64::from(labels.1);
    let disc_diff = truncated_discount(positions.0) - truncated_discount(positions.1);
    (gain_diff * disc_diff).abs() / ideal
}

/// Pseudo-responses (positive = push the document up) and Newton weights for
/// one query under the current scores.
pub fn lambdas(labels: &[u32], scores: &[f64], ids: &[String]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = labels.len();
    let mut lambda = vec![0.0; n];
    let mut weight = vec![0.0; n];
    let ideal = ideal_dcg(labels, TRUNCATION, Gain::Linear);
    if ideal == 0.0 {
        return Ok((lambda, weight));
    }
    let positions = rank(scores, ids)?;
    for i in 0..n {
        for j in 0..n {
            if labels[i] <= labels[j] {
                continue;
            }
            if positions[i] > TRUNCATION && positions[j] > TRUNCATION {
                continue;
            }
            let delta = delta_ndcg((labels[i], labels[j]), (positions[i], positions[j]), ideal);
            if delta == 0.0 {
                continue;
            }
            let rho = 1.0 / (1.0 + (SIGMA * (scores[i] - scores[j])).exp());
            let l = SIGMA * rho * delta;
            let w = SIGMA * SIGMA * rho * (1.0 - rho) * delta;
            lambda[i] += l;
            lambda[j] -= l;
            weight[i] += w;
            weight[j] += w;
        }
    }
    Ok((lambda, weight))
}

pub fn fit(set: &TrainingSet, hp: &TreeParams) -> Result<Ensemble> {
    hp.validate()?;
    let rows: Vec<&[f64]> = set.rows().collect();
    if rows.is_empty() {
        return Err(Error::Training("no training rows".into()));
    }
    let first = set.labels().next().unwrap_or(0);
    if set.labels().all(|l| l == first) {
        return Err(Error::Training("all rows share a single label".into()));
    }
    let offsets: Vec<usize> = set
        .queries
        .iter()
        .scan(0, |acc, q| {
            let start = *acc;
            *acc += q.len();
            Some(start)
        })
        .collect();

    let sorted = SortedColumns::new(&rows, set.n_attributes);
    let mut pred = vec![0.0; rows.len()];
    let mut lambda = vec![0.0; rows.len()];
    let mut weight = vec![0.0; rows.len()];
    let mut trees = Vec::with_capacity(hp.trees);
    for _ in 0..hp.trees {
        for (q, &off) in set.queries.iter().zip(&offsets) {
            let (l, w) = query_lambdas(q, &pred[off..off + q.len()])?;
            lambda[off..off + q.len()].copy_from_slice(&l);
            weight[off..off + q.len()].copy_from_slice(&w);
        }
        let mut fitted = fit_tree(&rows, &lambda, &sorted, hp.leaves, hp.min_samples_leaf);
        for (node, members) in fitted.leaves() {
            let num: f64 = members.iter().map(|&i| lambda[i]).sum();
            let den: f64 = members.iter().map(|&i| weight[i]).sum();
            let value = if den > f64::MIN_POSITIVE { num / den } else { 0.0 };
            fitted.tree.set_leaf_value(node, value);
            for &i in &members {
                pred[i] += hp.learning_rate * value;
            }
        }
        trees.push(fitted.tree);
    }
    Ok(Ensemble {
        base_score: 0.0,
        learning_rate: hp.learning_rate,
        trees,
    })
}

fn query_lambdas(q: &TrainQuery, scores: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    lambdas(&q.labels, scores, &q.ids)
}
