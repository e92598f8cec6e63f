//! Least-squares regression trees grown best-first, and additive ensembles of
//! them. Shared by MART and LambdaMART.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeParams {
    pub trees: usize,
    /// Maximum number of leaves per tree.
    pub leaves: usize,
    pub learning_rate: f64,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            trees: 100,
            leaves: 10,
            learning_rate: 0.1,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.leaves == 0 || self.min_samples_leaf == 0 {
            return Err(Error::Config("leaves and min_samples_leaf must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(Error::Config("learning_rate must be finite and non-negative".into()));
        }
        Ok(())
    }
}

/// `Split` sends rows with `x[feature] <= threshold` left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

/// Flat node array; the root is node 0 and children always follow their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn set_leaf_value(&mut self, node: usize, v: f64) {
        if let Node::Leaf { value } = &mut self.nodes[node] {
            *value = v;
        }
    }

    pub(crate) fn validate(&self, p: usize) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::ModelFormat("tree has no nodes".into()));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match n {
                Node::Leaf { value } if !value.is_finite() => {
                    return Err(Error::ModelFormat(format!("node {i}: non-finite leaf value")))
                }
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= p {
                        return Err(Error::ModelFormat(format!(
                            "node {i}: feature {feature} out of range for {p} attributes"
                        )));
                    }
                    if threshold.is_nan() {
                        return Err(Error::ModelFormat(format!("node {i}: NaN threshold")));
                    }
                    for c in [left, right] {
                        if *c <= i || *c >= self.nodes.len() {
                            return Err(Error::ModelFormat(format!("node {i}: bad child index {c}")));
                        }
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// `base_score + learning_rate * sum(tree(x))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub base_score: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl Ensemble {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        self.base_score + self.learning_rate * sum
    }

    pub(crate) fn validate(&self, p: usize) -> Result<()> {
        if !self.base_score.is_finite() || !self.learning_rate.is_finite() {
            return Err(Error::ModelFormat("non-finite ensemble parameters".into()));
        }
        self.trees.iter().try_for_each(|t| t.validate(p))
    }
}

/// Row indices sorted by each feature (ties by row index), computed once per
/// training run.
pub struct SortedColumns {
    by_feature: Vec<Vec<usize>>,
}

impl SortedColumns {
    pub fn new(rows: &[&[f64]], p: usize) -> Self {
        let by_feature = (0..p)
            .map(|f| {
                let mut idx: Vec<usize> = (0..rows.len()).collect();
                idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        SortedColumns { by_feature }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

const MIN_GAIN: f64 = 1e-12;

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= a && m < b {
        m
    } else {
        a
    }
}

fn best_split(
    rows: &[&[f64]],
    targets: &[f64],
    sorted: &SortedColumns,
    node_of: &[usize],
    node: usize,
    min_leaf: usize,
) -> Option<Split> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, &t) in targets.iter().enumerate() {
        if node_of[i] == node {
            total += t;
            count += 1;
        }
    }
    if count < 2 * min_leaf {
        return None;
    }
    let parent = total * total / count as f64;
    let mut best: Option<Split> = None;
    let mut members: Vec<usize> = Vec::with_capacity(count);
    for (f, order) in sorted.by_feature.iter().enumerate() {
        members.clear();
        members.extend(order.iter().copied().filter(|&i| node_of[i] == node));
        let mut left_sum = 0.0;
        for k in 0..count - 1 {
            let i = members[k];
            left_sum += targets[i];
            let n_left = k + 1;
            let n_right = count - n_left;
            if n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let (v, next) = (rows[i][f], rows[members[k + 1]][f]);
            if next <= v {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / n_left as f64 + right_sum * right_sum / n_right as f64 - parent;
            // strict comparison keeps the lowest feature, then lowest threshold, on ties
            if gain > MIN_GAIN && best.is_none_or(|b| gain > b.gain) {
                best = Some(Split {
                    feature: f,
                    threshold: midpoint(v, next),
                    gain,
                });
            }
        }
    }
    best
}

/// A fitted tree plus the leaf node each training row landed in.
pub struct FittedTree {
    pub tree: RegressionTree,
    pub leaf_of_row: Vec<usize>,
}

impl FittedTree {
    /// `(leaf node, member rows)` for every leaf, in node order.
    pub fn leaves(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = self
            .tree
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, Node::Leaf { .. }))
            .map(|(i, _)| (i, Vec::new()))
            .collect();
        for (row, &leaf) in self.leaf_of_row.iter().enumerate() {
            if let Some(slot) = out.iter_mut().find(|(i, _)| *i == leaf) {
                slot.1.push(row);
            }
        }
        out
    }
}

/// Grows a least-squares tree best-first: the leaf whose split most reduces
/// squared error is split next, until `max_leaves` or no split helps.
/// Leaves hold the mean target of their rows.
pub fn fit_tree(
    rows: &[&[f64]],
    targets: &[f64],
    sorted: &SortedColumns,
    max_leaves: usize,
    min_leaf: usize,
) -> FittedTree {
    let n = rows.len();
    let mean = |node_of: &[usize], node: usize| {
        let (s, c) = node_of
            .iter()
            .zip(targets)
            .filter(|(&k, _)| k == node)
            .fold((0.0, 0usize), |(s, c), (_, &t)| (s + t, c + 1));
        if c == 0 {
            0.0
        } else {
            s / c as f64
        }
    };

    let mut node_of = vec![0usize; n];
    let mut nodes = vec![Node::Leaf {
        value: mean(&node_of, 0),
    }];
    let mut open: Vec<(usize, Split)> = Vec::new();
    if let Some(s) = best_split(rows, targets, sorted, &node_of, 0, min_leaf) {
        open.push((0, s));
    }
    let mut leaves = 1;
    while leaves < max_leaves && !open.is_empty() {
        let mut pick = 0;
        for (k, (node, s)) in open.iter().enumerate() {
            let (bn, bs) = open[pick];
            if s.gain > bs.gain || (s.gain == bs.gain && *node < bn) {
                pick = k;
            }
        }
        let (node, split) = open.swap_remove(pick);
        let left = nodes.len();
        let right = left + 1;
        for (i, k) in node_of.iter_mut().enumerate() {
            if *k == node {
                *k = if rows[i][split.feature] <= split.threshold { left } else { right };
            }
        }
        nodes[node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        nodes.push(Node::Leaf {
            value: mean(&node_of, left),
        });
        nodes.push(Node::Leaf {
            value: mean(&node_of, right),
        });
        leaves += 1;
        for child in [left, right] {
            if let Some(s) = best_split(rows, targets, sorted, &node_of, child, min_leaf) {
                open.push((child, s));
            }
        }
    }
    FittedTree {
        tree: RegressionTree { nodes },
        leaf_of_row: node_of,
    }
}
