use std::net::{IpAddr, Ipv4Addr};
use std::path::{Path, PathBuf};

use refgame::game::SessionConfig;
use refgame::setup::SetupConfig;
use refgame::world::ContextKind;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

/// Contents of the `--config` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerSettings {
    pub setup: SetupConfig,
    pub session: SessionConfig,
    pub context_kind: ContextKind,
    /// Save each finished session's adapted parameters next to its transcript.
    pub save_checkpoints: bool,
}

impl Default for ServerSettings {
    fn default() -> Self {
        Self {
            setup: SetupConfig::default(),
            session: SessionConfig {
                record_timing: true,
                ..SessionConfig::default()
            },
            context_kind: ContextKind::Challenging,
            save_checkpoints: true,
        }
    }
}

impl ServerSettings {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::Config {
            path: path.into(),
            detail: e.to_string(),
        })?;
        Self::from_toml(&text).map_err(|e| ServiceError::Config {
            path: path.into(),
            detail: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("settings serialize")
    }
}

/// Values of the server's command-line flags.
#[derive(Debug, Clone, PartialEq)]
pub struct ServiceConfig {
    pub host: IpAddr,
    /// Zero picks a free port.
    pub port: u16,
    /// Pretrained model directory; absent pretrains from the settings.
    pub checkpoint: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub data_dir: PathBuf,
    /// Base seed for sessions that do not bring their own.
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            host: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            checkpoint: None,
            config: None,
            data_dir: PathBuf::from("data"),
            seed: 0,
        }
    }
}

impl ServiceConfig {
    pub fn settings(&self) -> Result<ServerSettings> {
        match &self.config {
            Some(path) => ServerSettings::load(path),
            None => Ok(ServerSettings::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn settings_round_trip_through_toml() {
        let s = ServerSettings::default();
        assert_eq!(ServerSettings::from_toml(&s.to_toml()).unwrap(), s);
        assert_eq!(ServerSettings::from_toml("").unwrap(), s);
        let partial = ServerSettings::from_toml("context_kind = \"simple\"\n").unwrap();
        assert_eq!(partial.context_kind, ContextKind::Simple);
        assert!(ServerSettings::from_toml("port = 1\n").is_err());
    }
}
