//! MART: gradient-boosted regression trees fit pointwise to relevance labels
//! under squared loss.

use super::data::TrainingSet;
use super::tree::{fit_tree, Ensemble, SortedColumns, TreeParams};
use crate::error::{Error, Result};

pub fn fit(set: &TrainingSet, hp: &TreeParams) -> Result<Ensemble> {
    hp.validate()?;
    let rows: Vec<&[f64]> = set.rows().collect();
    let labels: Vec<f64> = set.labels().map(f64::from).collect();
    if rows.is_empty() {
        return Err(Error::Training("no training rows".into()));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::Training("all rows share a single label".into()));
    }

    let base_score = labels.iter().sum::<f64>() / labels.len() as f64;
    let sorted = SortedColumns::new(&rows, set.n_attributes);
    let mut pred = vec![base_score; rows.len()];
    let mut residual = vec![0.0; rows.len()];
    let mut trees = Vec::with_capacity(hp.trees);
    for _ in 0..hp.trees {
        for ((r, &y), &p) in residual.iter_mut().zip(&labels).zip(&pred) {
            *r = y - p;
        }
        let fitted = fit_tree(&rows, &residual, &sorted, hp.leaves, hp.min_samples_leaf);
        for (p, &leaf) in pred.iter_mut().zip(&fitted.leaf_of_row) {
            if let super::tree::Node::Leaf { value } = fitted.tree.nodes[leaf] {
                *p += hp.learning_rate * value;
            }
        }
        trees.push(fitted.tree);
    }
    Ok(Ensemble {
        base_score,
        learning_rate: hp.learning_rate,
        trees,
    })
}
