//! Query-string decoding for the range-scoped endpoints.
//!
//! Recognised keys:
//!
//! | key         | form                                   | default          |
//! |-------------|----------------------------------------|------------------|
//! | `dataset`   | dataset id                             | required         |
//! | `year`      | integer query id                       | required         |
//! | `rankers`   | comma-separated ids, repeatable        | required         |
//! | `ranker`    | alias of `rankers`                     |                  |
//! | `lo`, `hi`  | 1-based ground-truth ranks, inclusive  | whole query      |
//! | `range`     | `lo-hi`, alternative to `lo`/`hi`      |                  |
//! | `method`    | `LIME` or `ICE`                        | `LIME`           |
//! | `threshold` | non-negative integer                   | none             |
//! | `filter`    | `attribute:min:max`, repeatable; either bound may be empty | none |
//! | `average`   | `after` or `before` threshold filtering| `after`          |
//! | `seed`      | explanation seed                       | the stored one   |

use std::fmt;
use std::str::FromStr;

use rankscope::dataset::QueryId;
use rankscope::explain::Method;
use serde::Serialize;

use crate::error::{ServiceError, ServiceResult};

fn bad(msg: impl Into<String>) -> ServiceError {
    ServiceError::BadRequest(msg.into())
}

/// Decoded key/value pairs that endpoints consume one key at a time; whatever
/// is left over at the end is rejected.
#[derive(Debug, Clone, Default)]
pub struct Params {
    pairs: Vec<(String, String)>,
}

impl Params {
    pub fn parse(query: &str) -> Self {
        Params {
            pairs: form_urlencoded::parse(query.as_bytes()).into_owned().collect(),
        }
    }

    pub fn take_all(&mut self, key: &str) -> Vec<String> {
        let (taken, rest) = std::mem::take(&mut self.pairs).into_iter().partition(|(k, _)| k == key);
        self.pairs = rest;
        taken.into_iter().map(|(_, v)| v).collect()
    }

    pub fn take(&mut self, key: &str) -> ServiceResult<Option<String>> {
        let mut values = self.take_all(key);
        match values.len() {
            0 => Ok(None),
            1 => Ok(values.pop()),
            _ => Err(bad(format!("parameter `{key}` given more than once"))),
        }
    }

    pub fn require(&mut self, key: &str) -> ServiceResult<String> {
        self.take(key)?.ok_or_else(|| bad(format!("missing parameter `{key}`")))
    }

    pub fn take_parsed<T: FromStr>(&mut self, key: &str) -> ServiceResult<Option<T>> {
        self.take(key)?
            .map(|v| {
                v.trim()
                    .parse::<T>()
                    .map_err(|_| bad(format!("invalid value `{v}` for `{key}`")))
            })
            .transpose()
    }

    pub fn require_parsed<T: FromStr>(&mut self, key: &str) -> ServiceResult<T> {
        self.take_parsed(key)?
            .ok_or_else(|| bad(format!("missing parameter `{key}`")))
    }

    pub fn finish(self) -> ServiceResult<()> {
        match self.pairs.first() {
            None => Ok(()),
            Some((k, _)) => Err(bad(format!("unknown parameter `{k}`"))),
        }
    }
}

/// Whether the per-attribute average line is taken before or after rows
/// beyond the deviation threshold are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Average {
    #[default]
    After,
    Before,
}

impl FromStr for Average {
    type Err = ServiceError;

    fn from_str(s: &str) -> ServiceResult<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "after" => Ok(Average::After),
            "before" => Ok(Average::Before),
            _ => Err(bad(format!("invalid average `{s}`; expected `after` or `before`"))),
        }
    }
}

/// Keep candidates whose attribute value lies in `[min, max]`; a missing
/// bound is open.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttributeFilter {
    pub attribute: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl AttributeFilter {
    pub fn accepts(&self, value: f64) -> bool {
        self.min.is_none_or(|m| value >= m) && self.max.is_none_or(|m| value <= m)
    }
}

impl FromStr for AttributeFilter {
    type Err = ServiceError;

    /// `name:min:max`, split at the last two colons so names may contain ':'.
    fn from_str(s: &str) -> ServiceResult<Self> {
        let mut parts = s.rsplitn(3, ':');
        let (max, min, attribute) = match (parts.next(), parts.next(), parts.next()) {
            (Some(max), Some(min), Some(name)) if !name.is_empty() => (max, min, name),
            _ => return Err(bad(format!("invalid filter `{s}`; expected `attribute:min:max`"))),
        };
        let bound = |b: &str| -> ServiceResult<Option<f64>> {
            let b = b.trim();
            if b.is_empty() {
                return Ok(None);
            }
            match b.parse::<f64>() {
                Ok(v) if !v.is_nan() => Ok(Some(v)),
                _ => Err(bad(format!("invalid bound `{b}` in filter `{s}`"))),
            }
        };
        let (min, max) = (bound(min)?, bound(max)?);
        if let (Some(a), Some(b)) = (min, max) {
            if a > b {
                return Err(bad(format!("filter `{s}` has min > max")));
            }
        }
        Ok(AttributeFilter {
            attribute: attribute.to_string(),
            min,
            max,
        })
    }
}

/// A closed ground-truth rank interval, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RankRange {
    pub lo: usize,
    pub hi: usize,
}

impl RankRange {
    pub fn new(lo: usize, hi: usize) -> ServiceResult<Self> {
        if lo == 0 {
            return Err(bad("ranks start at 1"));
        }
        if lo > hi {
            return Err(bad(format!("range {lo}-{hi} has lo > hi")));
        }
        Ok(RankRange { lo, hi })
    }

    pub fn contains(&self, rank: usize) -> bool {
        self.lo <= rank && rank <= self.hi
    }

    /// Clips `hi` to the query size.
    pub fn clip(self, n: usize) -> Self {
        RankRange {
            lo: self.lo,
            hi: self.hi.min(n),
        }
    }
}

impl fmt::Display for RankRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

impl FromStr for RankRange {
    type Err = ServiceError;

    fn from_str(s: &str) -> ServiceResult<Self> {
        let (lo, hi) = s
            .split_once('-')
            .ok_or_else(|| bad(format!("invalid range `{s}`; expected `lo-hi`")))?;
        let num = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| bad(format!("invalid range `{s}`")))
        };
        RankRange::new(num(lo)?, num(hi)?)
    }
}

/// Takes a range from `range` or from the `lo`/`hi` pair under the given
/// key names. `None` means the whole query.
pub fn take_range(p: &mut Params, range: &str, lo: &str, hi: &str) -> ServiceResult<Option<RankRange>> {
    let whole = p.take_parsed::<RankRange>(range)?;
    let lo_v = p.take_parsed::<usize>(lo)?;
    let hi_v = p.take_parsed::<usize>(hi)?;
    match (whole, lo_v, hi_v) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            Err(bad(format!("give either `{range}` or `{lo}`/`{hi}`, not both")))
        }
        (Some(r), None, None) => Ok(Some(r)),
        (None, None, None) => Ok(None),
        (None, lo, hi) => RankRange::new(lo.unwrap_or(1), hi.unwrap_or(usize::MAX)).map(Some),
    }
}

pub fn take_rankers(p: &mut Params) -> Vec<String> {
    let mut values = p.take_all("rankers");
    values.extend(p.take_all("ranker"));
    values
        .iter()
        .flat_map(|v| v.split(','))
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeQuery {
    pub dataset_id: String,
    pub query_id: QueryId,
    pub rankers: Vec<String>,
    pub range: Option<RankRange>,
    pub method: Method,
    pub deviation_threshold: Option<usize>,
    pub attribute_filters: Vec<AttributeFilter>,
    pub average: Average,
    pub seed: Option<u64>,
}

impl RangeQuery {
    /// Parses a complete query string; unknown keys are errors.
    pub fn parse(query: &str) -> ServiceResult<Self> {
        let mut p = Params::parse(query);
        let q = RangeQuery::from_params(&mut p)?;
        p.finish()?;
        Ok(q)
    }

    /// Consumes the range-query keys from `p`, leaving endpoint-specific ones.
    pub fn from_params(p: &mut Params) -> ServiceResult<Self> {
        let dataset_id = p.require("dataset")?;
        let query_id = p.require_parsed::<QueryId>("year")?;
        let rankers = take_rankers(p);
        if rankers.is_empty() {
            return Err(bad("at least one ranker is required (`rankers=a,b`)"));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(dup) = rankers.iter().find(|r| !seen.insert(r.as_str())) {
            return Err(bad(format!("ranker `{dup}` listed twice")));
        }
        let range = take_range(p, "range", "lo", "hi")?;
        let method = match p.take("method")? {
            None => Method::Lime,
            Some(m) => m.parse::<Method>().map_err(|_| bad(format!("invalid method `{m}`; expected LIME or ICE")))?,
        };
        let deviation_threshold = p.take_parsed::<usize>("threshold")?;
        let attribute_filters = p
            .take_all("filter")
            .iter()
            .map(|f| f.parse::<AttributeFilter>())
            .collect::<ServiceResult<Vec<_>>>()?;
        let average = p.take_parsed::<Average>("average")?.unwrap_or_default();
        let seed = p.take_parsed::<u64>("seed")?;
        Ok(RangeQuery {
            dataset_id,
            query_id,
            rankers,
            range,
            method,
            deviation_threshold,
            attribute_filters,
            average,
            seed,
        })
    }

    pub fn within_threshold(&self, deviation: usize) -> bool {
        self.deviation_threshold.is_none_or(|t| deviation <= t)
    }
}
