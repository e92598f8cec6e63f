//! ListNet: a linear scorer trained on the cross entropy between top-one
//! probabilities of the scores and of the relevance labels.
//!
//! Labels are rescaled to `[0, 4]` within each query before the softmax so
//! that `exp(label)` cannot overflow on long queries.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::TrainingSet;
use super::LinearModel;
use crate::error::{Error, Result};

pub const LABEL_SCALE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ListNetParams {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for ListNetParams {
    fn default() -> Self {
        ListNetParams {
            epochs: 200,
            learning_rate: 1e-3,
        }
    }
}

/// Labels mapped linearly onto `[0, LABEL_SCALE]`; a constant query maps to 0.
pub fn rescale_labels(labels: &[u32]) -> Vec<f64> {
    let lo = labels.iter().copied().min().unwrap_or(0);
    let hi = labels.iter().copied().max().unwrap_or(0);
    if hi == lo {
        return vec![0.0; labels.len()];
    }
    let span = f64::from(hi - lo);
    labels
        .iter()
        .map(|&l| LABEL_SCALE * f64::from(l - lo) / span)
        .collect()
}

fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|x| x / z).collect()
}

/// Cross entropy `-Σ Q(i) ln P(i)` for one query and its gradient in `w`,
/// where `P = softmax(rows · w)` and `Q = softmax(targets)`.
pub fn loss_and_gradient(w: &[f64], rows: &[Vec<f64>], targets: &[f64]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; w.len()];
    if rows.is_empty() {
        return (0.0, grad);
    }
    let scores: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().zip(w).map(|(x, w)| x * w).sum())
        .collect();
    let p = softmax(&scores);
    let q = softmax(targets);
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_z = m + scores.iter().map(|s| (s - m).exp()).sum::<f64>().ln();
    let loss = -q
        .iter()
        .zip(&scores)
        .map(|(qi, s)| qi * (s - log_z))
        .sum::<f64>();
    for ((pi, qi), row) in p.iter().zip(&q).zip(rows) {
        let c = pi - qi;
        for (g, x) in grad.iter_mut().zip(row) {
            *g += c * x;
        }
    }
    (loss, grad)
}

pub fn fit(set: &TrainingSet, hp: &ListNetParams, seed: u64) -> Result<LinearModel> {
    if !(hp.learning_rate.is_finite() && hp.learning_rate > 0.0) {
        return Err(Error::Config("learning_rate must be positive and finite".into()));
    }
    if set.n_rows() == 0 {
        return Err(Error::Training("no training rows".into()));
    }
    let stats = set.standardization();
    let z = set.standardized(&stats);
    let targets: Vec<Vec<f64>> = z.queries.iter().map(|q| rescale_labels(&q.labels)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..z.queries.len()).collect();
    let mut w = vec![0.0; set.n_attributes];
    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for &qi in &order {
            let (_, g) = loss_and_gradient(&w, &z.queries[qi].rows, &targets[qi]);
            for (w, g) in w.iter_mut().zip(&g) {
                *w -= hp.learning_rate * g;
            }
        }
    }
    Ok(LinearModel {
        weights: w,
        standardization: Some(stats),
    })
}
