use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use rankscope::{Error, Result};
use serde::Deserialize;

pub const ENV_CONFIG: &str = "RANKSCOPE_SERVICE_CONFIG";
pub const ENV_HOST: &str = "RANKSCOPE_HOST";
pub const ENV_PORT: &str = "RANKSCOPE_PORT";
pub const ENV_STORE: &str = "RANKSCOPE_STORE";
pub const ENV_CACHE_SIZE: &str = "RANKSCOPE_CACHE_SIZE";
pub const ENV_STATIC_DIR: &str = "RANKSCOPE_STATIC_DIR";

/// Service settings. Precedence: environment, then config file, then defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    pub store: PathBuf,
    /// Maximum number of cached response bodies; 0 disables the cache.
    pub cache_size: usize,
    /// Directory of a built UI bundle, served for paths no endpoint matches.
    pub static_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            store: PathBuf::from("store"),
            cache_size: 256,
            static_dir: None,
        }
    }
}

impl ServiceConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(format!("service config: {e}")))
    }

    /// Reads a config file; relative paths in it are taken relative to the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.store.is_relative() {
            cfg.store = base.join(&cfg.store);
        }
        if let Some(d) = cfg.static_dir.as_mut().filter(|d| d.is_relative()) {
            *d = base.join(&*d);
        }
        Ok(cfg)
    }

    /// `file` falls back to the path in `RANKSCOPE_SERVICE_CONFIG`; `env` is
    /// normally `std::env::var(..).ok()`.
    pub fn load(file: Option<&Path>, env: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let file = file.map(Path::to_path_buf).or_else(|| env(ENV_CONFIG).map(PathBuf::from));
        let mut cfg = match file {
            Some(f) => Self::from_file(&f)?,
            None => Self::default(),
        };
        cfg.apply_env(env)?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<()> {
        let parse_err = |k: &str, v: &str| Error::Config(format!("invalid {k}={v}"));
        if let Some(v) = env(ENV_HOST) {
            self.host = v;
        }
        if let Some(v) = env(ENV_PORT) {
            self.port = v.parse().map_err(|_| parse_err(ENV_PORT, &v))?;
        }
        if let Some(v) = env(ENV_STORE) {
            self.store = PathBuf::from(v);
        }
        if let Some(v) = env(ENV_CACHE_SIZE) {
            self.cache_size = v.parse().map_err(|_| parse_err(ENV_CACHE_SIZE, &v))?;
        }
        if let Some(v) = env(ENV_STATIC_DIR) {
            self.static_dir = Some(PathBuf::from(v));
        }
        Ok(())
    }

    pub fn addr(&self) -> Result<SocketAddr> {
        let s = format!("{}:{}", self.host, self.port);
        s.parse()
            .map_err(|_| Error::Config(format!("invalid listen address {s}")))
    }
}
