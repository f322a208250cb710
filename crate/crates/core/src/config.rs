//! Run configuration with layered sources and the provenance block written
//! into every output artifact.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::compiler::{EngineConfig, DEFAULT_DPI, DEFAULT_ENGINE, DEFAULT_RASTER};
use crate::metrics::{ClipScoreVariant, KidOptions, MetricOptions, DEFAULT_SHARED_K};
use crate::repair::{RepairOptions, Schedule, DEFAULT_MAX_ATTEMPTS, DEFAULT_MAX_NEW};

pub const TOOLKIT: &str = "tikzlab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ENV_PREFIX: &str = "TIKZLAB_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config file {path}: {message}")]
    File { path: String, message: String },
    #[error("invalid value for {key}: {value:?}")]
    Invalid { key: String, value: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Effective settings of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub engine_cmd: String,
    pub raster_cmd: String,
    pub embedder_addr: Option<String>,
    pub seed: u64,
    pub max_attempts: usize,
    pub max_new: usize,
    pub schedule: Schedule,
    pub timeout_s: f64,
    pub dpi: u32,
    pub kid_subset_size: usize,
    pub kid_subsets: usize,
    pub crystalbleu_k: usize,
    pub clipscore_variant: ClipScoreVariant,
}

impl Default for Config {
    fn default() -> Self {
        let kid = KidOptions::default();
        Self {
            engine_cmd: DEFAULT_ENGINE.into(),
            raster_cmd: DEFAULT_RASTER.into(),
            embedder_addr: None,
            seed: 0,
            max_attempts: DEFAULT_MAX_ATTEMPTS,
            max_new: DEFAULT_MAX_NEW,
            schedule: Schedule::JustBefore,
            timeout_s: 60.0,
            dpi: DEFAULT_DPI,
            kid_subset_size: kid.subset_size,
            kid_subsets: kid.subsets,
            crystalbleu_k: DEFAULT_SHARED_K,
            clipscore_variant: ClipScoreVariant::Cosine100,
        }
    }
}

/// One configuration layer; unset keys fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub engine_cmd: Option<String>,
    pub raster_cmd: Option<String>,
    pub embedder_addr: Option<String>,
    pub seed: Option<u64>,
    pub max_attempts: Option<usize>,
    pub max_new: Option<usize>,
    pub schedule: Option<Schedule>,
    pub timeout_s: Option<f64>,
    pub dpi: Option<u32>,
    pub kid_subset_size: Option<usize>,
    pub kid_subsets: Option<usize>,
    pub crystalbleu_k: Option<usize>,
    pub clipscore_variant: Option<ClipScoreVariant>,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
    })
}

impl ConfigLayer {
    /// Parses `key = value` lines in TOML syntax.
    pub fn from_toml(text: &str, path: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::File {
            path: path.to_string(),
            message: e.message().to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Reads `TIKZLAB_<KEY>` variables, e.g. `TIKZLAB_ENGINE_CMD`.
    pub fn from_vars<I, K, V>(vars: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut l = Self::default();
        for (k, v) in vars {
            let Some(key) = k.as_ref().strip_prefix(ENV_PREFIX) else { continue };
            let key = key.to_ascii_lowercase();
            let v = v.as_ref();
            match key.as_str() {
                "engine_cmd" => l.engine_cmd = Some(v.to_string()),
                "raster_cmd" => l.raster_cmd = Some(v.to_string()),
                "embedder_addr" | "embedder" => l.embedder_addr = Some(v.to_string()),
                "seed" => l.seed = Some(parse(&key, v)?),
                "max_attempts" => l.max_attempts = Some(parse(&key, v)?),
                "max_new" => l.max_new = Some(parse(&key, v)?),
                "schedule" => l.schedule = Some(parse(&key, v)?),
                "timeout_s" => l.timeout_s = Some(parse(&key, v)?),
                "dpi" => l.dpi = Some(parse(&key, v)?),
                "kid_subset_size" => l.kid_subset_size = Some(parse(&key, v)?),
                "kid_subsets" => l.kid_subsets = Some(parse(&key, v)?),
                "crystalbleu_k" => l.crystalbleu_k = Some(parse(&key, v)?),
                "clipscore_variant" => l.clipscore_variant = Some(parse(&key, v)?),
                _ => {}
            }
        }
        Ok(l)
    }

    pub fn from_env() -> Result<Self, ConfigError> {
        Self::from_vars(std::env::vars())
    }

    /// Fills unset keys from `lower`.
    pub fn or(self, lower: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            engine_cmd: self.engine_cmd.or(lower.engine_cmd),
            raster_cmd: self.raster_cmd.or(lower.raster_cmd),
            embedder_addr: self.embedder_addr.or(lower.embedder_addr),
            seed: self.seed.or(lower.seed),
            max_attempts: self.max_attempts.or(lower.max_attempts),
            max_new: self.max_new.or(lower.max_new),
            schedule: self.schedule.or(lower.schedule),
            timeout_s: self.timeout_s.or(lower.timeout_s),
            dpi: self.dpi.or(lower.dpi),
            kid_subset_size: self.kid_subset_size.or(lower.kid_subset_size),
            kid_subsets: self.kid_subsets.or(lower.kid_subsets),
            crystalbleu_k: self.crystalbleu_k.or(lower.crystalbleu_k),
            clipscore_variant: self.clipscore_variant.or(lower.clipscore_variant),
        }
    }
}

impl Config {
    /// Flag layer over environment over file over defaults.
    pub fn resolve(cli: ConfigLayer, env: ConfigLayer, file: ConfigLayer) -> Result<Config, ConfigError> {
        let l = cli.or(env).or(file);
        let d = Config::default();
        let cfg = Config {
            engine_cmd: l.engine_cmd.unwrap_or(d.engine_cmd),
            raster_cmd: l.raster_cmd.unwrap_or(d.raster_cmd),
            embedder_addr: l.embedder_addr.or(d.embedder_addr),
            seed: l.seed.unwrap_or(d.seed),
            max_attempts: l.max_attempts.unwrap_or(d.max_attempts),
            max_new: l.max_new.unwrap_or(d.max_new),
            schedule: l.schedule.unwrap_or(d.schedule),
            timeout_s: l.timeout_s.unwrap_or(d.timeout_s),
            dpi: l.dpi.unwrap_or(d.dpi),
            kid_subset_size: l.kid_subset_size.unwrap_or(d.kid_subset_size),
            kid_subsets: l.kid_subsets.unwrap_or(d.kid_subsets),
            crystalbleu_k: l.crystalbleu_k.unwrap_or(d.crystalbleu_k),
            clipscore_variant: l.clipscore_variant.unwrap_or(d.clipscore_variant),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |key: &str, value: String| Err(ConfigError::Invalid { key: key.into(), value });
        if self.max_attempts == 0 {
            return bad("max_attempts", "0".into());
        }
        if self.dpi == 0 {
            return bad("dpi", "0".into());
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > 0.0) {
            return bad("timeout_s", self.timeout_s.to_string());
        }
        if self.kid_subset_size < 2 || self.kid_subsets == 0 {
            return bad("kid_subset_size/kid_subsets", format!("{}/{}", self.kid_subset_size, self.kid_subsets));
        }
        if self.engine_cmd.trim().is_empty() {
            return bad("engine_cmd", self.engine_cmd.clone());
        }
        Ok(())
    }

    pub fn engine(&self, keep_scratch: bool) -> EngineConfig {
        EngineConfig {
            engine_cmd: self.engine_cmd.clone(),
            timeout: Duration::from_secs_f64(self.timeout_s),
            keep_scratch,
        }
    }

    pub fn repair(&self) -> RepairOptions {
        RepairOptions {
            max_attempts: self.max_attempts,
            schedule: self.schedule,
            max_new: self.max_new,
        }
    }

    pub fn metrics(&self) -> MetricOptions {
        MetricOptions {
            kid: KidOptions {
                subset_size: self.kid_subset_size,
                subsets: self.kid_subsets,
                seed: self.seed,
                ..KidOptions::default()
            },
            crystalbleu_k: self.crystalbleu_k,
            clip_variant: self.clipscore_variant,
            dpi: self.dpi,
            ..MetricOptions::default()
        }
    }
}

/// Metadata block identifying how an artifact was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub toolkit: String,
    pub version: String,
    pub command: String,
    pub config: Config,
    /// Input path to hex SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            toolkit: TOOLKIT.into(),
            version: VERSION.into(),
            command: command.into(),
            config: config.clone(),
            inputs: BTreeMap::new(),
        }
    }

    /// Records the hash of an input file, or of every file below a
    /// directory (path-sorted).
    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        let digest = if path.is_dir() { sha256_dir(path)? } else { sha256_file(path)? };
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut hasher = Sha256::new();
    let mut file = std::fs::File::open(path)?;
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Hash over relative paths and contents of all files below `dir`.
pub fn sha256_dir(dir: &Path) -> std::io::Result<String> {
    let mut files = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d)? {
            let p = e?.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                files.push(p);
            }
        }
    }
    files.sort();
    let mut hasher = Sha256::new();
    for f in files {
        let rel = f.strip_prefix(dir).unwrap_or(&f).to_string_lossy().into_owned();
        hasher.update(rel.as_bytes());
        hasher.update([0]);
        hasher.update(sha256_file(&f)?.as_bytes());
        hasher.update([b'\n']);
    }
    Ok(hex::encode(hasher.finalize()))
}
