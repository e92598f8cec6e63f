//! Coordinate ascent on mean NDCG@10 for a linear scorer over standardized
//! attributes, with seeded random restarts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::TrainingSet;
use super::LinearModel;
use crate::error::{Error, Result};
use crate::metrics::{discount, ideal_dcg, Gain, REPORT_K};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoordinateAscentParams {
    pub restarts: usize,
    pub max_cycles: usize,
    pub step_base: f64,
    pub step_doublings: u32,
    pub tolerance: f64,
}

impl Default for CoordinateAscentParams {
    fn default() -> Self {
        CoordinateAscentParams {
            restarts: 5,
            max_cycles: 25,
            step_base: 0.05,
            step_doublings: 20,
            tolerance: 1e-3,
        }
    }
}

/// Objective evaluator holding the standardized rows column-major per query.
struct Objective {
    /// `columns[q][j][i]`
    columns: Vec<Vec<Vec<f64>>>,
    labels: Vec<Vec<u32>>,
    ideal: Vec<f64>,
    scratch: Vec<usize>,
}

impl Objective {
    fn new(set: &TrainingSet) -> Self {
        let p = set.n_attributes;
        let columns = set
            .queries
            .iter()
            .map(|q| (0..p).map(|j| q.rows.iter().map(|r| r[j]).collect()).collect())
            .collect();
        Objective {
            columns,
            labels: set.queries.iter().map(|q| q.labels.clone()).collect(),
            ideal: set
                .queries
                .iter()
                .map(|q| ideal_dcg(&q.labels, REPORT_K, Gain::Linear))
                .collect(),
            scratch: Vec::new(),
        }
    }

    fn scores(&self, w: &[f64]) -> Vec<Vec<f64>> {
        self.columns
            .iter()
            .map(|cols| {
                let n = cols.first().map_or(0, Vec::len);
                let mut s = vec![0.0; n];
                for (col, &wj) in cols.iter().zip(w) {
                    for (s, x) in s.iter_mut().zip(col) {
                        *s += wj * x;
                    }
                }
                s
            })
            .collect()
    }

    /// Mean NDCG@10 when feature `j`'s weight moves by `delta`.
    fn mean_ndcg(&mut self, scores: &[Vec<f64>], j: usize, delta: f64) -> f64 {
        let mut total = 0.0;
        for q in 0..scores.len() {
            total += self.query_ndcg(q, &scores[q], j, delta);
        }
        total / scores.len() as f64
    }

    fn query_ndcg(&mut self, q: usize, scores: &[f64], j: usize, delta: f64) -> f64 {
        if self.ideal[q] == 0.0 {
            return 1.0;
        }
        let col = &self.columns[q][j];
        let key = |i: usize| scores[i] + delta * col[i];
        let n = scores.len();
        let k = REPORT_K.min(n);
        let order = &mut self.scratch;
        order.clear();
        order.extend(0..n);
        // descending score, index (= candidate id order) breaks ties
        let cmp = |a: &usize, b: &usize| key(*b).total_cmp(&key(*a)).then(a.cmp(b));
        if k < n {
            order.select_nth_unstable_by(k - 1, cmp);
        }
        order[..k].sort_unstable_by(cmp);
        let labels = &self.labels[q];
        let dcg: f64 = order[..k]
            .iter()
            .enumerate()
            .map(|(pos, &i)| f64::from(labels[i]) * discount(pos + 1))
            .sum();
        dcg / self.ideal[q]
    }
}

fn l1_normalize(w: &mut [f64]) {
    let norm: f64 = w.iter().map(|v| v.abs()).sum();
    if norm > 0.0 {
        w.iter_mut().for_each(|v| *v /= norm);
    }
}

struct Run {
    weights: Vec<f64>,
    objective: f64,
    trace: Vec<f64>,
}

fn ascend(obj: &mut Objective, mut w: Vec<f64>, hp: &CoordinateAscentParams) -> Run {
    let p = w.len();
    let mut scores = obj.scores(&w);
    let mut current = obj.mean_ndcg(&scores, 0, 0.0);
    let mut trace = vec![current];
    for _ in 0..hp.max_cycles {
        let start = current;
        for j in 0..p {
            let mut best: Option<(f64, f64)> = None;
            for k in 0..hp.step_doublings {
                let magnitude = hp.step_base * 2f64.powi(k as i32);
                for sign in [1.0, -1.0] {
                    let delta = if w[j] == 0.0 {
                        sign * magnitude
                    } else {
                        sign * magnitude * w[j].abs()
                    };
                    let value = obj.mean_ndcg(&scores, j, delta);
                    if value > best.map_or(current, |b| b.1) {
                        best = Some((delta, value));
                    }
                }
            }
            if let Some((delta, value)) = best {
                w[j] += delta;
                for (s, col) in scores.iter_mut().zip(&obj.columns) {
                    for (s, x) in s.iter_mut().zip(&col[j]) {
                        *s += delta * x;
                    }
                }
                current = value;
                trace.push(current);
            }
        }
        l1_normalize(&mut w);
        scores = obj.scores(&w);
        if current - start < hp.tolerance {
            break;
        }
    }
    let objective = obj.mean_ndcg(&scores, 0, 0.0);
    Run {
        weights: w,
        objective,
        trace,
    }
}

/// Returns the best restart's model and the objective values after each
/// accepted step of that restart.
pub fn fit(set: &TrainingSet, hp: &CoordinateAscentParams, seed: u64) -> Result<(LinearModel, Vec<f64>)> {
    if hp.restarts == 0 || hp.step_doublings == 0 || !(hp.step_base > 0.0) {
        return Err(Error::Config(
            "coordinate ascent needs restarts, step_doublings and step_base > 0".into(),
        ));
    }
    if set.queries.is_empty() || set.n_rows() == 0 {
        return Err(Error::Training("no training rows".into()));
    }
    let stats = set.standardization();
    let z = set.standardized(&stats);
    let p = set.n_attributes;
    let mut obj = Objective::new(&z);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut best: Option<Run> = None;
    for restart in 0..hp.restarts {
        let mut w: Vec<f64> = if restart == 0 {
            vec![1.0 / p as f64; p]
        } else {
            (0..p).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        l1_normalize(&mut w);
        let run = ascend(&mut obj, w, hp);
        log::debug!("coordinate ascent restart {restart}: {:.5}", run.objective);
        if best.as_ref().is_none_or(|b| run.objective > b.objective) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok((
        LinearModel {
            weights: best.weights,
            standardization: Some(stats),
        },
        best.trace,
    ))
}
