use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use attnfov::DisplayGeometry;
use serde::{Deserialize, Serialize};

/// Overrides `data_dir` when set.
pub const DATA_DIR_ENV: &str = "ATTNFOV_DATA_DIR";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Directory holding one event log per session.
    pub data_dir: PathBuf,
    /// Display used to render Gabor stimulus frames.
    pub display: DisplayGeometry,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            data_dir: PathBuf::from("attnfov-data"),
            display: DisplayGeometry::study_default(),
        }
    }
}

impl ServiceConfig {
    /// Reads a TOML file; missing keys take their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.display.validate()?;
        Ok(cfg)
    }

    /// Applies the data directory environment override.
    pub fn with_env(mut self) -> Self {
        if let Some(dir) = std::env::var_os(DATA_DIR_ENV).filter(|d| !d.is_empty()) {
            self.data_dir = PathBuf::from(dir);
        }
        self
    }
}
