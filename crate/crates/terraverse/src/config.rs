//! Run configuration: file loading, defaults, environment overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::compile::GridConfig;
use crate::curriculum::LadderConfig;
use crate::sim::SimConfig;
use crate::train::{CemConfig, SkillPolicy};
use crate::validate::{CheckLimits, FixConfig};

/// Supported config schema version.
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorChoice {
    Mock,
    Remote,
}

/// Single-mechanism variations of the full method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    /// Evolution prompts ask for harder terrain instead of reporting feedback.
    NoFeedback,
    /// One policy trains on the initial environment set for the full budget.
    InitialOnly,
    /// One policy trains on the final iteration's environments for the full
    /// budget (requires a bootstrap run to produce them).
    FinalOnly,
    /// One policy trains on a sequentially generated, diversity-conditioned
    /// set for the full budget.
    DiversityOnly,
    /// Generator ignores structure and samples randomly sized ramps and boxes.
    RandomBaseline,
    /// Upper bound: one policy trains directly on the benchmark obstacles.
    Oracle,
}

impl Ablation {
    pub fn parse(s: &str) -> Option<Ablation> {
        match s {
            "no_feedback" => Some(Ablation::NoFeedback),
            "initial_only" => Some(Ablation::InitialOnly),
            "final_only" => Some(Ablation::FinalOnly),
            "diversity_only" => Some(Ablation::DiversityOnly),
            "random_baseline" => Some(Ablation::RandomBaseline),
            "oracle" => Some(Ablation::Oracle),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Ablation::NoFeedback => "no_feedback",
            Ablation::InitialOnly => "initial_only",
            Ablation::FinalOnly => "final_only",
            Ablation::DiversityOnly => "diversity_only",
            Ablation::RandomBaseline => "random_baseline",
            Ablation::Oracle => "oracle",
        }
    }
}

/// Remote chat-completion endpoint settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteConfig {
    pub url: String,
    pub model: String,
    /// Transport retries on errors and 5xx responses.
    pub max_retries: u32,
    /// Base delay for exponential backoff, milliseconds.
    pub backoff_ms: u64,
    /// Request timeout, seconds.
    pub timeout_s: u64,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            url: "http://127.0.0.1:8080/v1/chat/completions".to_string(),
            model: "gpt-4o".to_string(),
            max_retries: 5,
            backoff_ms: 500,
            timeout_s: 120,
        }
    }
}

/// Everything one co-evolution run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub config_version: u32,
    /// Co-evolution iterations (T).
    pub iterations: usize,
    /// Parallel training agents per iteration (N).
    pub agents: usize,
    /// Terrains per agent library (J).
    pub library_size: usize,
    pub seed: u64,
    pub generator: GeneratorChoice,
    pub ablation: Option<Ablation>,
    /// Learning-progress resampling of library slots; off per the final
    /// method.
    pub resampling_enabled: bool,
    pub temperature: f64,
    /// Generation attempts per library slot before the mock fallback.
    pub max_attempts: u32,
    /// Concurrent in-flight remote requests.
    pub inflight_cap: usize,
    pub remote: RemoteConfig,
    pub grid: GridConfig,
    pub limits: CheckLimits,
    pub fix: FixConfig,
    pub sim: SimConfig,
    pub ladder: LadderConfig,
    pub cem: CemConfig,
    pub initial_policy: SkillPolicy,
    /// Path to a `.terrain` file used as the in-context example; the built-in
    /// example when absent.
    pub incontext_path: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            config_version: CONFIG_VERSION,
            iterations: 5,
            agents: 8,
            library_size: 10,
            seed: 0,
            generator: GeneratorChoice::Mock,
            ablation: None,
            resampling_enabled: false,
            temperature: 0.8,
            max_attempts: 4,
            inflight_cap: 4,
            remote: RemoteConfig::default(),
            grid: GridConfig::default(),
            limits: CheckLimits::default(),
            fix: FixConfig::default(),
            sim: SimConfig::default(),
            ladder: LadderConfig::default(),
            cem: CemConfig::default(),
            initial_policy: SkillPolicy::default(),
            incontext_path: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("unsupported config_version {found} (expected {CONFIG_VERSION})")]
    Version { found: u32 },
}

impl RunConfig {
    /// Load a TOML or JSON config by extension and apply environment
    /// overrides (`TERRAVERSE_ENDPOINT`).
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let is_json = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("json"))
            .unwrap_or(false);
        let mut cfg: RunConfig = if is_json {
            serde_json::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        } else {
            toml::from_str(&text).map_err(|e| ConfigError::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?
        };
        if cfg.config_version != CONFIG_VERSION {
            return Err(ConfigError::Version {
                found: cfg.config_version,
            });
        }
        cfg.apply_env_overrides();
        Ok(cfg)
    }

    pub fn apply_env_overrides(&mut self) {
        if let Ok(url) = std::env::var("TERRAVERSE_ENDPOINT") {
            if !url.is_empty() {
                self.remote.url = url;
            }
        }
    }

    /// Stable hash of the serialized config, for run identifiers.
    pub fn content_hash(&self) -> u64 {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        // FNV-1a.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_standard_scale() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.iterations, 5);
        assert_eq!(cfg.agents, 8);
        assert_eq!(cfg.library_size, 10);
        assert_eq!(cfg.ladder.levels, 10);
        assert!(!cfg.resampling_enabled);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = RunConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn json_and_toml_files_load() {
        let dir = std::env::temp_dir().join("terraverse_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = RunConfig {
            seed: 42,
            ..RunConfig::default()
        };

        let tpath = dir.join("a.toml");
        std::fs::write(&tpath, toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(RunConfig::load(&tpath).unwrap().seed, 42);

        let jpath = dir.join("a.json");
        std::fs::write(&jpath, serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(RunConfig::load(&jpath).unwrap().seed, 42);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = std::env::temp_dir().join("terraverse_cfg_test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.toml");
        std::fs::write(&path, "config_version = 2\n").unwrap();
        assert!(matches!(
            RunConfig::load(&path),
            Err(ConfigError::Version { found: 2 })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            RunConfig::load(Path::new("/nonexistent/terraverse.toml")),
            Err(ConfigError::Io { .. })
        ));
    }

    #[test]
    fn hash_distinguishes_configs() {
        let a = RunConfig::default();
        let b = RunConfig {
            seed: 1,
            ..RunConfig::default()
        };
        assert_ne!(a.content_hash(), b.content_hash());
    }
}
