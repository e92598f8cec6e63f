//! Synthetic ranking tables scored by a known linear function, used as the
//! recovery fixture for trainers and explainers.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{derive_relevance, Candidate, QueryGroup, QueryId, RankingTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub dataset_id: String,
    pub candidates: usize,
    pub first_year: QueryId,
    pub years: usize,
    /// Generating weights `w*`; their count fixes `p`.
    pub weights: Vec<f64>,
    /// Per-attribute standard deviation of the generated values.
    pub scales: Vec<f64>,
    pub offsets: Vec<f64>,
    /// Standard deviation of Gaussian noise added to the score before ranking.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            dataset_id: "synthetic".into(),
            candidates: 100,
            first_year: 2010,
            years: 6,
            // w_j * scale_j = 1.0, -3.0, 0.8, 2.0, 2.5
            weights: vec![1.0, -0.3, 8.0, 0.02, 0.5],
            scales: vec![1.0, 10.0, 0.1, 100.0, 5.0],
            offsets: vec![0.0, 50.0, 1.0, 500.0, 20.0],
            noise: 0.0,
            seed: 20240501,
        }
    }
}

impl SyntheticSpec {
    pub fn n_attributes(&self) -> usize {
        self.weights.len()
    }

    pub fn attribute_names(&self) -> Vec<String> {
        (1..=self.n_attributes()).map(|j| format!("x{j}")).collect()
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.weights).map(|(x, w)| x * w).sum()
    }

    fn validate(&self) -> Result<()> {
        let p = self.weights.len();
        if p == 0 || self.scales.len() != p || self.offsets.len() != p {
            return Err(Error::Config("weights, scales and offsets must have the same non-zero length".into()));
        }
        if self.candidates == 0 || self.years == 0 {
            return Err(Error::Config("need at least one candidate and one year".into()));
        }
        if self.scales.iter().any(|s| !(*s >= 0.0)) || !(self.noise >= 0.0) {
            return Err(Error::Config("scales and noise must be non-negative".into()));
        }
        Ok(())
    }

    /// Candidates `c000, c001, …` with independent Gaussian attributes per
    /// year, ranked by `w* · x` (plus noise) with ties broken by id.
    pub fn generate(&self) -> Result<RankingTable> {
        self.validate()?;
        let p = self.n_attributes();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let unit = Normal::new(0.0, 1.0).expect("unit normal");
        let width = (self.candidates - 1).to_string().len().max(3);
        let mut queries = Vec::with_capacity(self.years);
        for y in 0..self.years {
            let rows: Vec<Vec<f64>> = (0..self.candidates)
                .map(|_| {
                    (0..p)
                        .map(|j| self.offsets[j] + self.scales[j] * unit.sample(&mut rng))
                        .collect()
                })
                .collect();
            let scores: Vec<f64> = rows
                .iter()
                .map(|r| self.score(r) + self.noise * unit.sample(&mut rng))
                .collect();
            let ids: Vec<String> = (0..self.candidates).map(|i| format!("c{i:0width$}")).collect();
            let ranks = crate::rankers::rank(&scores, &ids)?;
            let group = QueryGroup {
                query_id: self.first_year + y as QueryId,
                candidates: ids
                    .into_iter()
                    .zip(rows)
                    .zip(ranks)
                    .map(|((candidate_id, attributes), ground_truth_rank)| Candidate {
                        candidate_id,
                        attributes,
                        ground_truth_rank,
                        relevance_label: 0,
                        tie_group: None,
                    })
                    .collect(),
            };
            queries.push(derive_relevance(&group)?);
        }
        RankingTable::new(self.dataset_id.clone(), self.attribute_names(), queries)
    }
}

/// Writes a table as CSV with columns `year,entity,rank,<attributes…>`, rows
/// by year then rank.
pub fn write_csv<W: Write>(table: &RankingTable, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["year".to_string(), "entity".into(), "rank".into()];
    header.extend(table.attribute_names.iter().cloned());
    let csv_err = |e: csv::Error| Error::Dataset(format!("CSV write failed: {e}"));
    w.write_record(&header).map_err(csv_err)?;
    let mut groups: Vec<&QueryGroup> = table.queries.iter().collect();
    groups.sort_by_key(|g| g.query_id);
    for g in groups {
        let mut cands: Vec<&Candidate> = g.candidates.iter().collect();
        cands.sort_by_key(|c| c.ground_truth_rank);
        for c in cands {
            let mut rec = vec![g.query_id.to_string(), c.candidate_id.clone(), c.ground_truth_rank.to_string()];
            rec.extend(c.attributes.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Dataset(format!("CSV write failed: {e}")))?;
    Ok(())
}
