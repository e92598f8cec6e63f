//! Filesystem artifact store.
//!
//! Every artifact is one JSON document at a path derived from its key:
//!
//! ```text
//! <root>/<dataset>/dataset.json
//! <root>/<dataset>/ranker/<ranker>.json
//! <root>/<dataset>/ranking/<ranker>/<query>.json
//! <root>/<dataset>/fit/<ranker>/<query>.json
//! <root>/<dataset>/explanation/<ranker>/<query>/<method>-<seed>.json
//! <root>/<dataset>/agreement/<ranker>/<query>.json
//! ```
//!
//! Writes go to a temporary file in the target directory and are renamed into
//! place, so readers see either the old or the new document.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::QueryId;
use crate::error::{Error, Result};
use crate::explain::Method;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    Dataset,
    Ranker,
    Ranking,
    Fit,
    Explanation,
    Agreement,
}

impl ArtifactKind {
    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::Dataset => "dataset",
            ArtifactKind::Ranker => "ranker",
            ArtifactKind::Ranking => "ranking",
            ArtifactKind::Fit => "fit",
            ArtifactKind::Explanation => "explanation",
            ArtifactKind::Agreement => "agreement",
        }
    }
}

impl FromStr for ArtifactKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "dataset" => ArtifactKind::Dataset,
            "ranker" => ArtifactKind::Ranker,
            "ranking" => ArtifactKind::Ranking,
            "fit" => ArtifactKind::Fit,
            "explanation" => ArtifactKind::Explanation,
            "agreement" => ArtifactKind::Agreement,
            _ => return Err(Error::InvalidKey(format!("unknown artifact kind '{s}'"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArtifactKey {
    pub dataset_id: String,
    pub kind: ArtifactKind,
    pub ranker_id: Option<String>,
    pub query_id: Option<QueryId>,
    pub method: Option<Method>,
    pub seed: Option<u64>,
}

/// Identifier segments are restricted to `[A-Za-z0-9._-]`, not starting with
/// a dot, so that keys map to paths one-to-one.
pub fn validate_segment(s: &str) -> Result<()> {
    let ok = !s.is_empty()
        && s.len() <= 128
        && !s.starts_with('.')
        && s.bytes().all(|b| b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidKey(format!(
            "'{s}' is not a valid identifier (use letters, digits, '.', '_' or '-', not starting with '.')"
        )))
    }
}

impl ArtifactKey {
    fn base(dataset_id: &str, kind: ArtifactKind) -> Self {
        ArtifactKey {
            dataset_id: dataset_id.to_string(),
            kind,
            ranker_id: None,
            query_id: None,
            method: None,
            seed: None,
        }
    }

    pub fn dataset(dataset_id: &str) -> Self {
        Self::base(dataset_id, ArtifactKind::Dataset)
    }

    pub fn ranker(dataset_id: &str, ranker_id: &str) -> Self {
        ArtifactKey {
            ranker_id: Some(ranker_id.to_string()),
            ..Self::base(dataset_id, ArtifactKind::Ranker)
        }
    }

    fn per_query(dataset_id: &str, kind: ArtifactKind, ranker_id: &str, query_id: QueryId) -> Self {
        ArtifactKey {
            ranker_id: Some(ranker_id.to_string()),
            query_id: Some(query_id),
            ..Self::base(dataset_id, kind)
        }
    }

    pub fn ranking(dataset_id: &str, ranker_id: &str, query_id: QueryId) -> Self {
        Self::per_query(dataset_id, ArtifactKind::Ranking, ranker_id, query_id)
    }

    pub fn fit(dataset_id: &str, ranker_id: &str, query_id: QueryId) -> Self {
        Self::per_query(dataset_id, ArtifactKind::Fit, ranker_id, query_id)
    }

    pub fn agreement(dataset_id: &str, ranker_id: &str, query_id: QueryId) -> Self {
        Self::per_query(dataset_id, ArtifactKind::Agreement, ranker_id, query_id)
    }

    pub fn explanation(dataset_id: &str, ranker_id: &str, query_id: QueryId, method: Method, seed: u64) -> Self {
        ArtifactKey {
            method: Some(method),
            seed: Some(seed),
            ..Self::per_query(dataset_id, ArtifactKind::Explanation, ranker_id, query_id)
        }
    }

    /// Checks that exactly the fields required by the kind are present and
    /// that every identifier is a valid path segment.
    pub fn validate(&self) -> Result<()> {
        validate_segment(&self.dataset_id)?;
        if let Some(r) = &self.ranker_id {
            validate_segment(r)?;
        }
        let (ranker, query, explanation) = match self.kind {
            ArtifactKind::Dataset => (false, false, false),
            ArtifactKind::Ranker => (true, false, false),
            ArtifactKind::Ranking | ArtifactKind::Fit | ArtifactKind::Agreement => (true, true, false),
            ArtifactKind::Explanation => (true, true, true),
        };
        let shape = self.ranker_id.is_some() == ranker
            && self.query_id.is_some() == query
            && self.method.is_some() == explanation
            && self.seed.is_some() == explanation;
        if !shape {
            return Err(Error::InvalidKey(format!(
                "fields do not match a {} key: {self}",
                self.kind.name()
            )));
        }
        Ok(())
    }

    /// Path relative to the store root, with `/` separators.
    pub fn relative_path(&self) -> Result<String> {
        self.validate()?;
        let d = &self.dataset_id;
        let kind = self.kind.name();
        let r = self.ranker_id.as_deref().unwrap_or_default();
        Ok(match (self.query_id, self.method, self.seed) {
            _ if self.kind == ArtifactKind::Dataset => format!("{d}/dataset.json"),
            (None, _, _) => format!("{d}/{kind}/{r}.json"),
            (Some(q), Some(m), Some(s)) => format!("{d}/{kind}/{r}/{q}/{m}-{s}.json"),
            (Some(q), _, _) => format!("{d}/{kind}/{r}/{q}.json"),
        })
    }

    /// Inverse of [`relative_path`](Self::relative_path).
    pub fn from_relative_path(path: &str) -> Result<Self> {
        let bad = || Error::InvalidKey(format!("'{path}' is not an artifact path"));
        let parts: Vec<&str> = path.split('/').collect();
        let stem = |s: &str| s.strip_suffix(".json").map(str::to_string).ok_or_else(bad);
        let query = |s: &str| s.parse::<QueryId>().map_err(|_| bad());
        let key = match parts.as_slice() {
            [d, "dataset.json"] => Self::dataset(d),
            [d, "ranker", r] => Self::ranker(d, &stem(r)?),
            [d, kind, r, q] => {
                let kind: ArtifactKind = kind.parse()?;
                if !matches!(kind, ArtifactKind::Ranking | ArtifactKind::Fit | ArtifactKind::Agreement) {
                    return Err(bad());
                }
                Self::per_query(d, kind, r, query(&stem(q)?)?)
            }
            [d, "explanation", r, q, file] => {
                let name = stem(file)?;
                let (m, s) = name.rsplit_once('-').ok_or_else(bad)?;
                let seed = s.parse::<u64>().map_err(|_| bad())?;
                if seed.to_string() != s {
                    return Err(bad());
                }
                Self::explanation(d, r, query(q)?, m.parse()?, seed)
            }
            _ => return Err(bad()),
        };
        // canonical form only, so that path <-> key is a bijection
        if key.relative_path()? != path {
            return Err(bad());
        }
        Ok(key)
    }
}

impl fmt::Display for ArtifactKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.dataset_id)?;
        if let Some(r) = &self.ranker_id {
            write!(f, "/{r}")?;
        }
        if let Some(q) = self.query_id {
            write!(f, "/{q}")?;
        }
        if let Some(m) = self.method {
            write!(f, "/{m}")?;
        }
        if let Some(s) = self.seed {
            write!(f, "/seed={s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Store {
    root: PathBuf,
}

impl Store {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Store { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, key: &ArtifactKey) -> Result<PathBuf> {
        Ok(self.root.join(key.relative_path()?))
    }

    pub fn put(&self, key: &ArtifactKey, document: &[u8]) -> Result<()> {
        let path = self.path_of(key)?;
        let dir = path.parent().expect("artifact paths have a parent");
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
        tmp.write_all(document).map_err(|e| Error::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
        Ok(())
    }

    pub fn put_json<T: Serialize>(&self, key: &ArtifactKey, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.put(key, s.as_bytes())
    }

    pub fn get(&self, key: &ArtifactKey) -> Result<Vec<u8>> {
        let path = self.path_of(key)?;
        match fs::read(&path) {
            Ok(b) => Ok(b),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::NotFound(key.to_string())),
            Err(e) => Err(Error::io(path, e)),
        }
    }

    pub fn get_string(&self, key: &ArtifactKey) -> Result<String> {
        String::from_utf8(self.get(key)?)
            .map_err(|_| Error::ModelFormat(format!("artifact {key} is not UTF-8")))
    }

    pub fn get_json<T: for<'de> Deserialize<'de>>(&self, key: &ArtifactKey) -> Result<T> {
        Ok(serde_json::from_slice(&self.get(key)?)?)
    }

    pub fn contains(&self, key: &ArtifactKey) -> bool {
        self.path_of(key).is_ok_and(|p| p.is_file())
    }

    /// Keys whose relative path starts with `prefix`, in lexicographic path
    /// order. Files that are not canonical artifact paths are ignored.
    pub fn list(&self, prefix: &str) -> Result<Vec<ArtifactKey>> {
        let mut paths = Vec::new();
        if self.root.is_dir() {
            walk(&self.root, String::new(), &mut paths)?;
        }
        paths.retain(|p| p.starts_with(prefix));
        paths.sort();
        Ok(paths
            .iter()
            .filter_map(|p| ArtifactKey::from_relative_path(p).ok())
            .collect())
    }

    /// Dataset ids with a stored dataset document, sorted.
    pub fn datasets(&self) -> Result<Vec<String>> {
        Ok(self
            .list("")?
            .into_iter()
            .filter(|k| k.kind == ArtifactKind::Dataset)
            .map(|k| k.dataset_id)
            .collect())
    }
}

fn walk(dir: &Path, rel: String, out: &mut Vec<String>) -> Result<()> {
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let Some(name) = entry.file_name().to_str().map(str::to_string) else {
            continue;
        };
        let child = if rel.is_empty() { name } else { format!("{rel}/{name}") };
        let ft = entry.file_type().map_err(|e| Error::io(entry.path(), e))?;
        if ft.is_dir() {
            walk(&entry.path(), child, out)?;
        } else if ft.is_file() {
            out.push(child);
        }
    }
    Ok(())
}
