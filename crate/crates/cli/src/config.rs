use std::fs;
use std::path::{Path, PathBuf};

use chrono::Duration;
use crossprice::arbitrage::PartitionLimits;
use crossprice::ingest::InclusionPolicy;
use serde::Deserialize;

use crate::error::{CliError, Classify};

pub const MAX_K: usize = 1000;
const MAX_WINDOW_DAYS: i64 = 30;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    /// Keyword classifier, hash embedder and ground-truth rule verifier.
    #[default]
    Deterministic,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub in_dir: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub markets: Option<PathBuf>,
    pub prices: Option<PathBuf>,
    pub frictions: Option<PathBuf>,
    pub relations: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub k: Option<usize>,
    pub retrieve_k: Option<usize>,
    /// Humantime, e.g. `5m`.
    pub staleness: Option<String>,
    pub persistence: Option<String>,
    pub partition_limits: Option<PartitionLimits>,
}

/// File-level settings; any flag given on the command line wins.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub provider: Option<Provider>,
    pub paths: PathsConfig,
    pub pipeline: PipelineConfig,
    pub policy: Option<InclusionPolicy>,
}

impl RunConfig {
    /// Relative paths are taken against the config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).config(format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).config(format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.in_dir,
            &mut p.out_dir,
            &mut p.markets,
            &mut p.prices,
            &mut p.frictions,
            &mut p.relations,
            &mut p.truth,
            &mut p.cache_dir,
        ] {
            if let Some(rel) = slot.as_mut().filter(|p| p.is_relative()) {
                *rel = base.join(&*rel);
            }
        }
        Ok(cfg)
    }

    pub fn k(&self, flag: Option<usize>) -> Result<usize, CliError> {
        let k = flag.or(self.pipeline.k).unwrap_or(20);
        check_k("k", k)
    }

    pub fn retrieve_k(&self, flag: Option<usize>, k: usize) -> Result<usize, CliError> {
        let r = flag.or(self.pipeline.retrieve_k).unwrap_or(32.max(k));
        check_k("retrieve-k", r)
    }

    pub fn staleness(&self, flag: Option<Duration>) -> Result<Duration, CliError> {
        window("staleness", flag, self.pipeline.staleness.as_deref(), Duration::minutes(5), true)
    }

    pub fn persistence(&self, flag: Option<Duration>) -> Result<Duration, CliError> {
        window("persistence", flag, self.pipeline.persistence.as_deref(), Duration::minutes(30), false)
    }

    pub fn partition_limits(&self) -> Result<PartitionLimits, CliError> {
        let l = self.pipeline.partition_limits.unwrap_or_default();
        if l.min_subs == 0 || l.min_subs > l.max_subs || l.max_perms == 0 {
            return Err(CliError::config(format!(
                "partition_limits need 1 <= min_subs <= max_subs and max_perms >= 1, got {l:?}"
            )));
        }
        Ok(l)
    }

    pub fn provider(&self, flag: Option<Provider>) -> Provider {
        flag.or(self.provider).unwrap_or_default()
    }
}

fn check_k(name: &str, k: usize) -> Result<usize, CliError> {
    if !(1..=MAX_K).contains(&k) {
        return Err(CliError::config(format!("{name} must be in 1..={MAX_K}, got {k}")));
    }
    Ok(k)
}

fn window(name: &str, flag: Option<Duration>, file: Option<&str>, default: Duration, zero_ok: bool) -> Result<Duration, CliError> {
    let d = match (flag, file) {
        (Some(d), _) => d,
        (None, Some(s)) => parse_duration(s).map_err(|e| CliError::config(format!("{name}: {e}")))?,
        (None, None) => default,
    };
    if d < Duration::zero() || (!zero_ok && d.is_zero()) || d > Duration::days(MAX_WINDOW_DAYS) {
        return Err(CliError::config(format!("{name} out of range: {d}")));
    }
    Ok(d)
}

/// Clap value parser for humantime durations.
pub fn parse_duration(s: &str) -> Result<Duration, String> {
    let std = humantime::parse_duration(s).map_err(|e| format!("invalid duration {s:?}: {e}"))?;
    Duration::from_std(std).map_err(|e| e.to_string())
}

/// Input resolution: flag, then config, then the conventional file name
/// inside the input directory.
pub struct Inputs<'a> {
    pub cfg: &'a RunConfig,
    pub in_dir: Option<PathBuf>,
}

impl<'a> Inputs<'a> {
    pub fn new(cfg: &'a RunConfig, in_dir: Option<PathBuf>) -> Self {
        let in_dir = in_dir.or_else(|| cfg.paths.in_dir.clone());
        Inputs { cfg, in_dir }
    }

    fn pick(&self, flag: Option<PathBuf>, file: Option<&PathBuf>, name: &str) -> Option<(PathBuf, bool)> {
        flag.or_else(|| file.cloned())
            .map(|p| (p, true))
            .or_else(|| self.in_dir.as_ref().map(|d| (d.join(name), false)))
    }

    /// A required input that must exist.
    pub fn require(&self, flag: Option<PathBuf>, file: Option<&PathBuf>, name: &str) -> Result<PathBuf, CliError> {
        let (path, _) = self
            .pick(flag, file, name)
            .ok_or_else(|| CliError::config(format!("no path for {name}: pass --in or an explicit path")))?;
        if !path.is_file() {
            return Err(CliError::config(format!("missing input {}", path.display())));
        }
        Ok(path)
    }

    /// An input with a built-in fallback: absent is fine unless it was named
    /// explicitly.
    pub fn optional(&self, flag: Option<PathBuf>, file: Option<&PathBuf>, name: &str) -> Result<Option<PathBuf>, CliError> {
        match self.pick(flag, file, name) {
            Some((path, _)) if path.is_file() => Ok(Some(path)),
            Some((path, true)) => Err(CliError::config(format!("missing input {}", path.display()))),
            _ => Ok(None),
        }
    }

    pub fn out_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        flag.or_else(|| self.cfg.paths.out_dir.clone())
            .or_else(|| self.in_dir.clone())
            .ok_or_else(|| CliError::config("no output directory: pass --out or --in"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn durations_parse_and_bound() {
        assert_eq!(parse_duration("0s").unwrap(), Duration::zero());
        assert_eq!(parse_duration("90m").unwrap(), Duration::minutes(90));
        assert!(parse_duration("soon").is_err());
        let cfg = RunConfig::default();
        assert_eq!(cfg.staleness(None).unwrap(), Duration::minutes(5));
        assert!(cfg.persistence(Some(Duration::zero())).is_err());
        assert!(cfg.staleness(Some(Duration::days(31))).is_err());
    }

    #[test]
    fn flags_beat_file_values() {
        let cfg: RunConfig = toml::from_str("[pipeline]\nk = 8\nstaleness = \"1m\"").unwrap();
        assert_eq!(cfg.k(None).unwrap(), 8);
        assert_eq!(cfg.k(Some(3)).unwrap(), 3);
        assert_eq!(cfg.staleness(None).unwrap(), Duration::minutes(1));
        assert_eq!(cfg.staleness(Some(Duration::zero())).unwrap(), Duration::zero());
        assert!(cfg.k(Some(0)).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("[pipeline]\nkk = 8").is_err());
    }
}
