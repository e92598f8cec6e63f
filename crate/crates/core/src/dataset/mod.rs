//! Ranking tables: published rankings abstracted into the query/document/label
//! form used by learning-to-rank. One publication year is one query; each ranked
//! entity is a document whose relevance label is derived from its published rank.

mod ingest;
mod letor;

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{ingest_csv, ingest_csv_reader, ColumnMapping, Ingested, RejectedRow};
pub use letor::{from_letor, parse_letor, to_letor, write_letor};

/// Query identifier. For yearly rankings this is the publication year.
pub type QueryId = i64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub candidate_id: String,
    pub attributes: Vec<f64>,
    /// 1 = best.
    pub ground_truth_rank: usize,
    pub relevance_label: u32,
    /// Published rank shared with at least one other candidate of the same query.
    /// Set only when ingestion had to break a tie.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_group: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryGroup {
    pub query_id: QueryId,
    pub candidates: Vec<Candidate>,
}

impl QueryGroup {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.candidates.iter().map(|c| c.ground_truth_rank).collect()
    }

    pub fn labels(&self) -> Vec<u32> {
        self.candidates.iter().map(|c| c.relevance_label).collect()
    }

    pub fn candidate_ids(&self) -> Vec<&str> {
        self.candidates
            .iter()
            .map(|c| c.candidate_id.as_str())
            .collect()
    }

    pub fn rows(&self) -> Vec<&[f64]> {
        self.candidates
            .iter()
            .map(|c| c.attributes.as_slice())
            .collect()
    }

    pub fn position_of(&self, candidate_id: &str) -> Option<usize> {
        self.candidates
            .iter()
            .position(|c| c.candidate_id == candidate_id)
    }

    fn check_ranks_permutation(&self) -> Result<()> {
        let n = self.candidates.len();
        let mut seen = vec![false; n];
        for c in &self.candidates {
            let r = c.ground_truth_rank;
            if r == 0 || r > n || seen[r - 1] {
                return Err(Error::InvalidRanking(format!(
                    "query {}: ground-truth ranks are not a permutation of 1..{n} (offending rank {r} for '{}')",
                    self.query_id, c.candidate_id
                )));
            }
            seen[r - 1] = true;
        }
        Ok(())
    }
}

/// The attribute matrix of a published ranking together with its per-year
/// ground-truth rankings. Immutable once validated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankingTable {
    pub dataset_id: String,
    pub attribute_names: Vec<String>,
    pub queries: Vec<QueryGroup>,
}

impl RankingTable {
    pub fn new(
        dataset_id: impl Into<String>,
        attribute_names: Vec<String>,
        queries: Vec<QueryGroup>,
    ) -> Result<Self> {
        let table = RankingTable {
            dataset_id: dataset_id.into(),
            attribute_names,
            queries,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.attribute_names.len();
        if p == 0 {
            return Err(Error::Dataset("at least one attribute is required".into()));
        }
        if self.queries.is_empty() {
            return Err(Error::Dataset("at least one query group is required".into()));
        }
        let mut qids = HashSet::new();
        for q in &self.queries {
            if !qids.insert(q.query_id) {
                return Err(Error::Dataset(format!("duplicate query id {}", q.query_id)));
            }
            if q.candidates.is_empty() {
                return Err(Error::Dataset(format!("query {} has no candidates", q.query_id)));
            }
            let mut ids = HashSet::new();
            for c in &q.candidates {
                if !ids.insert(c.candidate_id.as_str()) {
                    return Err(Error::Dataset(format!(
                        "duplicate candidate '{}' in query {}",
                        c.candidate_id, q.query_id
                    )));
                }
                if c.attributes.len() != p {
                    return Err(Error::Dimension {
                        expected: p,
                        actual: c.attributes.len(),
                    });
                }
                if let Some(v) = c.attributes.iter().find(|v| !v.is_finite()) {
                    return Err(Error::Dataset(format!(
                        "non-finite attribute value {v} for '{}' in query {}",
                        c.candidate_id, q.query_id
                    )));
                }
            }
            q.check_ranks_permutation()?;
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let table: RankingTable = serde_json::from_str(s)?;
        table.validate()?;
        Ok(table)
    }

    pub fn n_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn n_rows(&self) -> usize {
        self.queries.iter().map(QueryGroup::len).sum()
    }

    pub fn query(&self, query_id: QueryId) -> Option<&QueryGroup> {
        self.queries.iter().find(|q| q.query_id == query_id)
    }

    /// Query ids in ascending order.
    pub fn query_ids(&self) -> Vec<QueryId> {
        let set: BTreeSet<QueryId> = self.queries.iter().map(|q| q.query_id).collect();
        set.into_iter().collect()
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names.iter().position(|a| a == name)
    }

    /// Every attribute row of every query, in storage order.
    pub fn all_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.queries
            .iter()
            .flat_map(|q| q.candidates.iter().map(|c| c.attributes.as_slice()))
    }

    /// Values of one attribute across all queries.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.all_rows().map(|r| r[j]).collect()
    }

    /// Returns a copy with queries sorted by id and candidates by ground-truth rank.
    pub fn canonicalized(&self) -> Self {
        let mut t = self.clone();
        t.queries.sort_by_key(|q| q.query_id);
        for q in &mut t.queries {
            q.candidates.sort_by_key(|c| c.ground_truth_rank);
        }
        t
    }
}

/// Relabels a group with `label = n_q - rank`, so the best candidate gets the
/// largest label and the mapping stays bijective.
pub fn derive_relevance(group: &QueryGroup) -> Result<QueryGroup> {
    group.check_ranks_permutation()?;
    let n = group.len();
    let mut out = group.clone();
    for c in &mut out.candidates {
        c.relevance_label = u32::try_from(n - c.ground_truth_rank)
            .map_err(|_| Error::Dataset(format!("query {} is too large", group.query_id)))?;
    }
    Ok(out)
}

/// Splits off one query (year) as the test set; every other query trains.
pub fn split_leave_one_year_out(
    table: &RankingTable,
    held_out: QueryId,
) -> Result<(RankingTable, RankingTable)> {
    if table.query(held_out).is_none() {
        return Err(Error::Dataset(format!("query {held_out} is not in the table")));
    }
    let (test, train): (Vec<_>, Vec<_>) = table
        .queries
        .iter()
        .cloned()
        .partition(|q| q.query_id == held_out);
    if train.is_empty() {
        return Err(Error::Dataset(format!(
            "holding out {held_out} leaves no training queries"
        )));
    }
    let train = RankingTable::new(
        table.dataset_id.clone(),
        table.attribute_names.clone(),
        train,
    )?;
    let test = RankingTable::new(
        table.dataset_id.clone(),
        table.attribute_names.clone(),
        test,
    )?;
    Ok((train, test))
}
