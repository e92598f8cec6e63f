use serde::{Deserialize, Serialize};

use crate::dataset::RankingTable;
use crate::error::{Error, Result};

/// Per-attribute z-scoring with statistics taken from the training rows.
/// Attributes with zero spread map to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardization {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64]>, p: usize) -> Self {
        let mut n = 0usize;
        let mut mean = vec![0.0; p];
        let mut m2 = vec![0.0; p];
        // Welford, one pass
        for row in rows {
            n += 1;
            for j in 0..p {
                let d = row[j] - mean[j];
                mean[j] += d / n as f64;
                m2[j] += d * (row[j] - mean[j]);
            }
        }
        let std = m2
            .iter()
            .map(|&s| if n > 0 { (s / n as f64).sqrt() } else { 0.0 })
            .collect();
        Standardization { mean, std }
    }

    pub fn apply(&self, j: usize, x: f64) -> f64 {
        let s = self.std[j];
        if s > 0.0 {
            (x - self.mean[j]) / s
        } else {
            0.0
        }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter().enumerate().map(|(j, &x)| self.apply(j, x)).collect()
    }

    pub(crate) fn validate(&self, p: usize) -> Result<()> {
        if self.mean.len() != p || self.std.len() != p {
            return Err(Error::ModelFormat(format!(
                "standardization statistics do not cover {p} attributes"
            )));
        }
        if self.mean.iter().chain(&self.std).any(|v| !v.is_finite()) || self.std.iter().any(|&s| s < 0.0) {
            return Err(Error::ModelFormat("invalid standardization statistics".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainQuery {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

impl TrainQuery {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Within-query pairs `(better, worse)` with strictly higher label first.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.len();
        (0..n).flat_map(move |i| {
            (0..n)
                .filter(move |&j| self.labels[i] > self.labels[j])
                .map(move |j| (i, j))
        })
    }
}

/// Training view of a [`RankingTable`]. Candidates within each query are
/// sorted by id so that index order is the documented tie-break order.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub n_attributes: usize,
    pub queries: Vec<TrainQuery>,
}

impl TrainingSet {
    pub fn from_table(table: &RankingTable) -> Result<Self> {
        let p = table.n_attributes();
        if p == 0 {
            return Err(Error::Training("no attributes".into()));
        }
        let mut queries = Vec::with_capacity(table.queries.len());
        let mut groups: Vec<_> = table.queries.iter().collect();
        groups.sort_by_key(|q| q.query_id);
        for q in groups {
            let mut cands: Vec<_> = q.candidates.iter().collect();
            cands.sort_by(|a, b| a.candidate_id.cmp(&b.candidate_id));
            queries.push(TrainQuery {
                ids: cands.iter().map(|c| c.candidate_id.clone()).collect(),
                rows: cands.iter().map(|c| c.attributes.clone()).collect(),
                labels: cands.iter().map(|c| c.relevance_label).collect(),
            });
        }
        Ok(TrainingSet {
            n_attributes: p,
            queries,
        })
    }

    pub fn from_queries(n_attributes: usize, queries: Vec<TrainQuery>) -> Self {
        TrainingSet {
            n_attributes,
            queries,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.queries.iter().map(TrainQuery::len).sum()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.queries
            .iter()
            .flat_map(|q| q.rows.iter().map(Vec::as_slice))
    }

    pub fn labels(&self) -> impl Iterator<Item = u32> + '_ {
        self.queries.iter().flat_map(|q| q.labels.iter().copied())
    }

    pub fn n_pairs(&self) -> usize {
        self.queries.iter().map(|q| q.pairs().count()).sum()
    }

    /// Errors unless at least one query has two candidates with different labels.
    pub fn require_pairs(&self) -> Result<()> {
        if self.queries.iter().any(|q| q.pairs().next().is_some()) {
            Ok(())
        } else {
            Err(Error::Training(
                "no within-query pairs with different labels".into(),
            ))
        }
    }

    pub fn standardization(&self) -> Standardization {
        Standardization::fit(self.rows(), self.n_attributes)
    }

    /// Copy with every row z-scored.
    pub fn standardized(&self, s: &Standardization) -> TrainingSet {
        TrainingSet {
            n_attributes: self.n_attributes,
            queries: self
                .queries
                .iter()
                .map(|q| TrainQuery {
                    ids: q.ids.clone(),
                    rows: q.rows.iter().map(|r| s.transform(r)).collect(),
                    labels: q.labels.clone(),
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standardization_population_stats() {
        let rows: Vec<Vec<f64>> = vec![vec![1.0, 5.0], vec![3.0, 5.0]];
        let s = Standardization::fit(rows.iter().map(Vec::as_slice), 2);
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 0.0]);
        assert_eq!(s.transform(&[3.0, 9.0]), vec![1.0, 0.0]);
    }

    #[test]
    fn pairs_follow_labels() {
        let q = TrainQuery {
            ids: vec!["a".into(), "b".into(), "c".into()],
            rows: vec![vec![0.0]; 3],
            labels: vec![1, 2, 1],
        };
        let pairs: Vec<_> = q.pairs().collect();
        assert_eq!(pairs, vec![(1, 0), (1, 2)]);
    }
}
