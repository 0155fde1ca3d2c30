//! TOML run configuration. Every field is optional; command-line flags win.

use std::fmt;
use std::path::{Path, PathBuf};

use dative_core::detect::DetectionConfig;
use dative_core::lexicon::VerbLexicon;
use serde::{Deserialize, Serialize};

/// Bad flags, unreadable config, missing inputs. Maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

pub fn config_error(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SurgerySection {
    pub condition: Option<String>,
    pub count_per_form: Option<usize>,
    pub error_rate: Option<f64>,
    pub do_share: Option<f64>,
    pub pollute: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreSection {
    pub backend: Option<String>,
    pub timeout_secs: Option<u64>,
    pub retries: Option<u32>,
    pub max_in_flight: Option<usize>,
    pub log_base: Option<String>,
    pub batch_size: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub lexicon: Option<PathBuf>,
    pub workers: Option<usize>,
    pub detection: Option<DetectionConfig>,
    pub surgery: SurgerySection,
    pub score: ScoreSection,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| config_error(format!("config {}: {e}", path.display())))
    }

    pub fn detection(&self) -> anyhow::Result<DetectionConfig> {
        let cfg = self.detection.clone().unwrap_or_default();
        cfg.validate().map_err(|e| config_error(e.to_string()))?;
        Ok(cfg)
    }

    pub fn lexicon(&self, flag: Option<&Path>) -> anyhow::Result<VerbLexicon> {
        match flag.or(self.lexicon.as_deref()) {
            None => Ok(VerbLexicon::builtin()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| config_error(format!("cannot read lexicon {}: {e}", p.display())))?;
                VerbLexicon::parse(&text).map_err(|e| config_error(format!("lexicon {}: {e}", p.display())))
            }
        }
    }
}

/// An input path from the flag or the config; must exist.
pub fn require_input(flag: Option<PathBuf>, config: Option<&PathBuf>, what: &str) -> anyhow::Result<PathBuf> {
    let p = flag
        .or_else(|| config.cloned())
        .ok_or_else(|| config_error(format!("no {what} given")))?;
    if !p.exists() {
        return Err(config_error(format!("{what} {} does not exist", p.display())));
    }
    Ok(p)
}
