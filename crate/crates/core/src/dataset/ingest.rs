use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{derive_relevance, Candidate, QueryGroup, QueryId, RankingTable};
use crate::error::{Error, Result};

/// Declares how the columns of a published-ranking CSV map onto a [`RankingTable`].
///
/// ```toml
/// dataset_id = "university"
/// year = "year"
/// entity = "name"
/// rank = "rank"
/// drop = ["total_score"]
/// # attributes = [...]   # default: every column not named above
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    #[serde(default)]
    pub dataset_id: Option<String>,
    /// Column holding the query key (normally the publication year).
    pub year: String,
    pub entity: String,
    pub rank: String,
    /// Attribute columns in order. Empty means every remaining column.
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default)]
    pub drop: Vec<String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: String,
    /// Maps non-integer query keys (e.g. "2011-12") to integer query ids.
    #[serde(default)]
    pub query_ids: BTreeMap<String, QueryId>,
}

fn default_delimiter() -> String {
    ",".to_string()
}

impl ColumnMapping {
    pub fn new(year: &str, entity: &str, rank: &str) -> Self {
        ColumnMapping {
            dataset_id: None,
            year: year.into(),
            entity: entity.into(),
            rank: rank.into(),
            attributes: Vec::new(),
            drop: Vec::new(),
            delimiter: default_delimiter(),
            query_ids: BTreeMap::new(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("column mapping: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&s)
    }

    fn delimiter_byte(&self) -> Result<u8> {
        match self.delimiter.as_bytes() {
            [b] if b.is_ascii() => Ok(*b),
            _ => Err(Error::Schema(format!(
                "delimiter must be a single ASCII character, got {:?}",
                self.delimiter
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedRow {
    /// 1-based data row (the header is row 0).
    pub row: usize,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub table: RankingTable,
    /// Rows dropped because their rank cell could not be parsed.
    pub rejected: Vec<RejectedRow>,
}

pub fn ingest_csv(path: &Path, mapping: &ColumnMapping) -> Result<Ingested> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let fallback_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    ingest_csv_reader(file, mapping, &fallback_id)
}

/// Parses a published rank cell. Ties are often printed as "=44" or "44=".
fn parse_rank(cell: &str) -> Option<u32> {
    let t = cell.trim().trim_start_matches('=').trim_end_matches('=').trim();
    match t.parse::<u32>() {
        Ok(r) if r >= 1 => Some(r),
        _ => None,
    }
}

struct Row {
    entity: String,
    published_rank: u32,
    attributes: Vec<f64>,
    order: usize,
}

pub fn ingest_csv_reader<R: Read>(
    reader: R,
    mapping: &ColumnMapping,
    fallback_dataset_id: &str,
) -> Result<Ingested> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter_byte()?)
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Schema(format!("unreadable header row: {e}")))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let mut seen = HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::Schema(format!("duplicate column '{h}' in header")));
        }
    }
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column '{name}'")))
    };
    let year_col = col(&mapping.year)?;
    let entity_col = col(&mapping.entity)?;
    let rank_col = col(&mapping.rank)?;
    for d in &mapping.drop {
        col(d)?;
    }

    let attribute_names: Vec<String> = if mapping.attributes.is_empty() {
        headers
            .iter()
            .filter(|h| {
                **h != mapping.year
                    && **h != mapping.entity
                    && **h != mapping.rank
                    && !mapping.drop.contains(h)
            })
            .cloned()
            .collect()
    } else {
        mapping.attributes.clone()
    };
    if attribute_names.is_empty() {
        return Err(Error::Schema("no attribute columns".into()));
    }
    let attr_cols = attribute_names
        .iter()
        .map(|a| col(a))
        .collect::<Result<Vec<_>>>()?;

    let mut groups: BTreeMap<QueryId, Vec<Row>> = BTreeMap::new();
    let mut keys: HashSet<(QueryId, String)> = HashSet::new();
    let mut rejected = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Ingest {
            row,
            message: e.to_string(),
        })?;
        let field = |c: usize| record.get(c).unwrap_or("").trim();

        let year_cell = field(year_col);
        let query_id = if mapping.query_ids.is_empty() {
            year_cell.parse::<QueryId>().map_err(|_| Error::Ingest {
                row,
                message: format!("query key '{year_cell}' in column '{}' is not an integer", mapping.year),
            })?
        } else {
            *mapping.query_ids.get(year_cell).ok_or_else(|| Error::Ingest {
                row,
                message: format!("query key '{year_cell}' has no entry in query_ids"),
            })?
        };

        let entity = field(entity_col).to_string();
        if entity.is_empty() {
            return Err(Error::Ingest {
                row,
                message: format!("empty entity in column '{}'", mapping.entity),
            });
        }

        let Some(published_rank) = parse_rank(field(rank_col)) else {
            rejected.push(RejectedRow {
                row,
                reason: format!("unparseable rank '{}'", field(rank_col)),
            });
            continue;
        };

        let mut attributes = Vec::with_capacity(attr_cols.len());
        for (name, &c) in attribute_names.iter().zip(&attr_cols) {
            let cell = field(c);
            let v = cell.parse::<f64>().ok().filter(|v| v.is_finite());
            match v {
                Some(v) => attributes.push(v),
                None => {
                    return Err(Error::Ingest {
                        row,
                        message: format!("non-numeric value '{cell}' in attribute column '{name}'"),
                    })
                }
            }
        }

        if !keys.insert((query_id, entity.clone())) {
            return Err(Error::Ingest {
                row,
                message: format!("duplicate entity '{entity}' for query {query_id}"),
            });
        }
        let rows = groups.entry(query_id).or_default();
        let order = rows.len();
        rows.push(Row {
            entity,
            published_rank,
            attributes,
            order,
        });
    }

    for r in &rejected {
        log::warn!("rejected data row {}: {}", r.row, r.reason);
    }

    let mut queries = Vec::with_capacity(groups.len());
    for (query_id, mut rows) in groups {
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for r in &rows {
            *counts.entry(r.published_rank).or_default() += 1;
        }
        // Ties resolve by order of appearance.
        rows.sort_by_key(|r| (r.published_rank, r.order));
        let candidates = rows
            .into_iter()
            .enumerate()
            .map(|(pos, r)| Candidate {
                tie_group: (counts[&r.published_rank] > 1).then_some(r.published_rank),
                candidate_id: r.entity,
                attributes: r.attributes,
                ground_truth_rank: pos + 1,
                relevance_label: 0,
            })
            .collect();
        queries.push(derive_relevance(&QueryGroup {
            query_id,
            candidates,
        })?);
    }

    let dataset_id = mapping
        .dataset_id
        .clone()
        .unwrap_or_else(|| fallback_dataset_id.to_string());
    let table = RankingTable::new(dataset_id, attribute_names, queries)?;
    Ok(Ingested { table, rejected })
}
