//! LETOR / SVMlight-style text interchange:
//! `<label> qid:<query> 1:<v1> 2:<v2> ... p:<vp> # <candidate_id>`

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{Candidate, QueryGroup, QueryId, RankingTable};
use crate::error::{Error, Result};

/// Renders the table in LETOR format: queries by ascending id, candidates by
/// ascending ground-truth rank. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_letor<W: Write>(table: &RankingTable, mut out: W) -> Result<()> {
    if table.n_attributes() == 0 {
        return Err(Error::Dataset("cannot write LETOR with no attributes".into()));
    }
    let table = table.canonicalized();
    let mut line = String::new();
    for q in &table.queries {
        for c in &q.candidates {
            let id = c.candidate_id.as_str();
            if id.is_empty() || id.trim() != id || id.contains(['\n', '\r']) {
                return Err(Error::Dataset(format!(
                    "candidate id {id:?} cannot be stored in a LETOR comment"
                )));
            }
            line.clear();
            write!(line, "{} qid:{}", c.relevance_label, q.query_id).unwrap();
            for (j, v) in c.attributes.iter().enumerate() {
                write!(line, " {}:{}", j + 1, v).unwrap();
            }
            writeln!(line, " # {id}").unwrap();
            out.write_all(line.as_bytes())
                .map_err(|e| Error::io("<letor output>", e))?;
        }
    }
    Ok(())
}

pub fn to_letor(table: &RankingTable, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_letor(table, &mut buf)?;
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn from_letor(path: &Path) -> Result<RankingTable> {
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "letor".into());
    parse_letor(&s, &id)
}

struct ParsedLine {
    label: u32,
    qid: QueryId,
    values: Vec<f64>,
    id: Option<String>,
}

fn parse_line(raw: &str, line: usize) -> Result<ParsedLine> {
    let err = |message: String| Error::Letor { line, message };
    let (body, comment) = match raw.split_once('#') {
        Some((b, c)) => (b, Some(c.trim())),
        None => (raw, None),
    };
    let mut tokens = body.split_whitespace();
    let label_tok = tokens.next().ok_or_else(|| err("missing label".into()))?;
    let label = label_tok
        .parse::<u32>()
        .map_err(|_| err(format!("label '{label_tok}' is not a non-negative integer")))?;
    let qid_tok = tokens.next().ok_or_else(|| err("missing qid".into()))?;
    let qid = qid_tok
        .strip_prefix("qid:")
        .and_then(|q| q.parse::<QueryId>().ok())
        .ok_or_else(|| err(format!("expected qid:<integer>, got '{qid_tok}'")))?;
    let mut values = Vec::new();
    for tok in tokens {
        let (k, v) = tok
            .split_once(':')
            .ok_or_else(|| err(format!("feature token '{tok}' is not index:value")))?;
        let k = k
            .parse::<usize>()
            .map_err(|_| err(format!("feature index '{k}' is not an integer")))?;
        if k != values.len() + 1 {
            return Err(err(format!(
                "feature indices must be contiguous from 1; expected {}, got {k}",
                values.len() + 1
            )));
        }
        let v = v
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| err(format!("feature value '{v}' is not a finite number")))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(err("no features".into()));
    }
    Ok(ParsedLine {
        label,
        qid,
        values,
        id: comment.filter(|c| !c.is_empty()).map(str::to_string),
    })
}

/// Parses LETOR text. Ground-truth ranks are recovered per query by descending
/// label, ties broken by file order. Attribute names become `f1..fp`.
pub fn parse_letor(text: &str, dataset_id: &str) -> Result<RankingTable> {
    let mut order: Vec<QueryId> = Vec::new();
    let mut groups: HashMap<QueryId, Vec<ParsedLine>> = HashMap::new();
    let mut p: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parsed = parse_line(trimmed, line)?;
        match p {
            None => p = Some(parsed.values.len()),
            Some(p) if p != parsed.values.len() => {
                return Err(Error::Letor {
                    line,
                    message: format!("expected {p} features, found {}", parsed.values.len()),
                })
            }
            _ => {}
        }
        groups
            .entry(parsed.qid)
            .or_insert_with(|| {
                order.push(parsed.qid);
                Vec::new()
            })
            .push(parsed);
    }
    let p = p.ok_or_else(|| Error::Dataset("LETOR input has no data lines".into()))?;

    order.sort_unstable();
    let mut queries = Vec::with_capacity(order.len());
    for qid in order {
        let mut lines = groups.remove(&qid).unwrap_or_default();
        // stable: equal labels keep file order
        lines.sort_by(|a, b| b.label.cmp(&a.label));
        let candidates = lines
            .into_iter()
            .enumerate()
            .map(|(pos, l)| Candidate {
                candidate_id: l.id.unwrap_or_else(|| format!("{qid}:{}", pos + 1)),
                attributes: l.values,
                ground_truth_rank: pos + 1,
                relevance_label: l.label,
                tie_group: None,
            })
            .collect();
        queries.push(QueryGroup {
            query_id: qid,
            candidates,
        });
    }
    let names = (1..=p).map(|j| format!("f{j}")).collect();
    RankingTable::new(dataset_id, names, queries)
}
