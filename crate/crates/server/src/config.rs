//! Service configuration, read from a TOML file.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tsvis_core::agents::AnalyticalAgentSpec;
use tsvis_core::ingest::SourceConfig;

use crate::auth::UserAccount;

fn default_listen() -> SocketAddr {
    SocketAddr::from(([127, 0, 0, 1], 8080))
}

fn default_session_ttl() -> u64 {
    8 * 3600
}

fn default_tick() -> u64 {
    60
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Config {
    #[serde(default = "default_listen")]
    pub listen: SocketAddr,
    /// Registry collections live here as JSON-lines files.
    pub data_dir: PathBuf,
    /// Rendered `{pageId}.svg` previews.
    pub thumbnail_dir: PathBuf,
    /// Relative file sources resolve against this directory.
    #[serde(default)]
    pub source_root: Option<PathBuf>,
    #[serde(default = "default_session_ttl")]
    pub session_ttl_secs: u64,
    /// Period of the background tick; sources and agents additionally keep
    /// their own intervals.
    #[serde(default = "default_tick")]
    pub tick_secs: u64,
    #[serde(default)]
    pub users: Vec<UserAccount>,
    #[serde(default)]
    pub sources: Vec<SourceConfig>,
    #[serde(default)]
    pub agents: Vec<AnalyticalAgentSpec>,
}

impl Config {
    pub fn load(path: impl AsRef<Path>) -> anyhow::Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
        let mut config = Self::parse(&text)?;
        // relative directories are taken from the config file's location
        let base = path.parent().unwrap_or(Path::new("."));
        for dir in [&mut config.data_dir, &mut config.thumbnail_dir] {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        if let Some(root) = config.source_root.as_mut().filter(|r| r.is_relative()) {
            *root = base.join(&*root);
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let config: Config = toml::from_str(text)?;
        anyhow::ensure!(config.tick_secs > 0, "tickSecs must be positive");
        anyhow::ensure!(config.session_ttl_secs > 0, "sessionTtlSecs must be positive");
        for source in &config.sources {
            source.validate()?;
        }
        for agent in &config.agents {
            agent.validate()?;
        }
        Ok(config)
    }
}
