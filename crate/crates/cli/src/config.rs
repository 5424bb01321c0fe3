use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use refgame::experiments::ForgettingConfig;
use refgame::game::SelfPlayConfig;
use refgame::gradcheck::GradCheckConfig;
use refgame::metrics::Bootstrap;
use refgame::setup::{Pretrained, SetupConfig};
use serde::{Deserialize, Serialize};

/// Contents of a `--config` file. Every section is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub setup: SetupConfig,
    pub selfplay: SelfPlayConfig,
    /// Games per batch subcommand.
    pub games: usize,
    pub bootstrap: Bootstrap,
    pub forgetting: ForgettingConfig,
    pub gradcheck: GradCheckConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            setup: SetupConfig::default(),
            selfplay: SelfPlayConfig::default(),
            games: 20,
            bootstrap: Bootstrap::default(),
            forgetting: ForgettingConfig::default(),
            gradcheck: GradCheckConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing {}", p.display()))
            }
        }
    }
}

/// What was asked of a run, beside the configuration itself.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunInfo {
    pub subcommand: String,
    pub seed: u64,
    pub output: PathBuf,
    pub config_file: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub transcripts: Option<PathBuf>,
    pub games: Option<usize>,
    pub variants: Vec<String>,
}

/// Everything a run used, written as `resolved-config.toml`.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved<'a> {
    pub run: &'a RunInfo,
    pub config: &'a RunConfig,
}

impl Resolved<'_> {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("resolved-config.toml");
        let text = toml::to_string(self).context("serializing the resolved configuration")?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

/// Loads the model named by `checkpoint`, or pretrains one from `setup`.
pub fn model(setup: &SetupConfig, checkpoint: Option<&Path>) -> Result<Pretrained> {
    match checkpoint {
        Some(dir) => setup
            .load(dir)
            .with_context(|| format!("loading checkpoint {}", dir.display())),
        None => {
            tracing::info!("no checkpoint given; pretraining from the configuration");
            Ok(setup.pretrain()?)
        }
    }
}

/// An output directory that did not hold anything before this run. A taken
/// name gets the first free numeric suffix.
pub fn fresh_dir(requested: &Path) -> Result<PathBuf> {
    let is_free = |p: &Path| match std::fs::read_dir(p) {
        Ok(mut entries) => entries.next().is_none(),
        Err(e) => e.kind() == std::io::ErrorKind::NotFound,
    };
    let mut candidate = requested.to_path_buf();
    let mut n = 1;
    while !is_free(&candidate) {
        let name = requested
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into());
        candidate = requested.with_file_name(format!("{name}-{n}"));
        n += 1;
    }
    std::fs::create_dir_all(&candidate)
        .with_context(|| format!("creating {}", candidate.display()))?;
    Ok(candidate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taken_directories_get_a_suffix() {
        let root = tempfile::tempdir().unwrap();
        let want = root.path().join("out");
        assert_eq!(fresh_dir(&want).unwrap(), want);
        assert_eq!(
            fresh_dir(&want).unwrap(),
            want,
            "an empty directory is reused"
        );
        std::fs::write(want.join("x"), "").unwrap();
        let second = fresh_dir(&want).unwrap();
        assert_eq!(second, root.path().join("out-1"));
        std::fs::write(second.join("x"), "").unwrap();
        assert_eq!(fresh_dir(&want).unwrap(), root.path().join("out-2"));
    }

    #[test]
    fn config_files_round_trip_and_reject_unknown_keys() {
        let c = RunConfig::default();
        let text = toml::to_string(&c).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), c);
        assert!(toml::from_str::<RunConfig>("gamez = 3").is_err());
        assert_eq!(toml::from_str::<RunConfig>("games = 3").unwrap().games, 3);
    }
}
