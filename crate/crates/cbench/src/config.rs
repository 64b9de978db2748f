//! Optional TOML configuration. Every section is optional and missing keys
//! take their defaults; command-line flags and environment variables
//! override whatever is set here.
//!
//! ```toml
//! [csv]
//! delimiter = "semicolon"
//!
//! [learn]
//! algorithm = "tabu"
//! score = { kind = "bde", iss = 10 }
//!
//! [bootstrap]
//! iterations = 200
//! workers = 4
//!
//! [serve]
//! addr = "0.0.0.0:8080"
//! data_dir = "/var/lib/cbench"
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use cbench_core::dataset::CsvOptions;
use cbench_core::decision::PolicyOptions;
use cbench_core::infer::QueryOptions;
use cbench_core::learn::{BootstrapConfig, SearchConfig};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config `{path}`: {source}")]
    Parse { path: PathBuf, source: toml::de::Error },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub csv: CsvOptions,
    pub learn: SearchConfig,
    /// Present means `learn` bootstraps by default.
    pub bootstrap: Option<BootstrapConfig>,
    pub query: QueryOptions,
    pub policy: PolicyOptions,
    pub serve: ServeConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeConfig {
    pub addr: String,
    pub data_dir: PathBuf,
    /// Async runtime threads; 0 uses one per core.
    pub workers: usize,
}

impl Default for ServeConfig {
    fn default() -> Self {
        ServeConfig {
            addr: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("cbench-data"),
            workers: 0,
        }
    }
}

impl Config {
    pub fn parse(text: &str, path: &Path) -> Result<Config, ConfigError> {
        toml::from_str(text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Config::parse(&text, path)
    }

    /// `path` when given, otherwise defaults.
    pub fn load_or_default(path: Option<&Path>) -> Result<Config, ConfigError> {
        path.map_or_else(|| Ok(Config::default()), Config::load)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cbench_core::learn::Algorithm;
    use cbench_core::score::ScoreKind;

    #[test]
    fn partial_sections_keep_defaults() {
        let c = Config::parse(
            "[learn]\nalgorithm = \"tabu\"\nscore = { kind = \"bde\", iss = 10 }\n[bootstrap]\nworkers = 4\n",
            Path::new("x.toml"),
        )
        .unwrap();
        assert_eq!(c.learn.algorithm, Algorithm::Tabu);
        assert_eq!(c.learn.score.kind, ScoreKind::Bde);
        assert_eq!(c.learn.score.iss, 10.0);
        assert_eq!(c.learn.tabu_length, 10);
        let b = c.bootstrap.unwrap();
        assert_eq!(b.workers, 4);
        assert_eq!(b.iterations, BootstrapConfig::default().iterations);
        assert_eq!(c.serve.addr, "127.0.0.1:8080");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Config::parse("[serve]\nport = 3\n", Path::new("x.toml")).is_err());
    }
}
