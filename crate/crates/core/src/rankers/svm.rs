//! Pairwise ranking SVM: a linear scorer trained on within-query difference
//! vectors with an L2-regularized hinge loss.
//!
//! The objective is `(1/P) Σ max(0, 1 - w·(x_i - x_j)) + λ‖w‖²` over the `P`
//! crucial pairs, minimized by Pegasos-style stochastic sub-gradient descent
//! from `w = 0`, visiting pairs in a seeded shuffled order each epoch.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::TrainingSet;
use super::LinearModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            lambda: 1e-4,
            epochs: 20,
        }
    }
}

/// Mean hinge loss plus `λ‖w‖²` on standardized rows.
pub fn objective(set: &TrainingSet, w: &[f64], lambda: f64) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for q in &set.queries {
        for (i, j) in q.pairs() {
            let margin: f64 = w
                .iter()
                .zip(q.rows[i].iter().zip(&q.rows[j]))
                .map(|(w, (a, b))| w * (a - b))
                .sum();
            total += (1.0 - margin).max(0.0);
            count += 1;
        }
    }
    total / count.max(1) as f64 + lambda * w.iter().map(|v| v * v).sum::<f64>()
}

pub fn fit(set: &TrainingSet, hp: &SvmParams, seed: u64) -> Result<LinearModel> {
    if !(hp.lambda.is_finite() && hp.lambda > 0.0) {
        return Err(Error::Config("lambda must be positive and finite".into()));
    }
    set.require_pairs()?;
    let stats = set.standardization();
    let z = set.standardized(&stats);
    let p = set.n_attributes;

    let mut pairs: Vec<(u32, u32, u32)> = Vec::new();
    for (qi, q) in z.queries.iter().enumerate() {
        pairs.extend(q.pairs().map(|(i, j)| (qi as u32, i as u32, j as u32)));
    }

    // Pegasos step sizes for (λ'/2)‖w‖² with λ' = 2λ.
    let reg = 2.0 * hp.lambda;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![0.0; p];
    let mut diff = vec![0.0; p];
    let mut t = 0u64;
    for _ in 0..hp.epochs {
        pairs.shuffle(&mut rng);
        for &(q, i, j) in &pairs {
            t += 1;
            let q = &z.queries[q as usize];
            let (a, b) = (&q.rows[i as usize], &q.rows[j as usize]);
            for k in 0..p {
                diff[k] = a[k] - b[k];
            }
            let margin: f64 = w.iter().zip(&diff).map(|(w, d)| w * d).sum();
            let eta = 1.0 / (reg * t as f64);
            let shrink = 1.0 - eta * reg;
            for k in 0..p {
                w[k] *= shrink;
                if margin < 1.0 {
                    w[k] += eta * diff[k];
                }
            }
        }
    }
    Ok(LinearModel {
        weights: w,
        standardization: Some(stats),
    })
}
