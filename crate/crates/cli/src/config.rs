//! `pin.toml` loading and resolution against command-line flags.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use pin_forge::pagination::PageParams;
use pin_forge::render::{RendererConfig, Theme};
use pin_forge::signals::{Tokenizer, VocabTokenizer, WhitespaceTokenizer};
use serde::Deserialize;

use crate::error::CliError;

pub const DEFAULT_CONFIG: &str = "pin.toml";

/// Contents of the configuration file. Every field is optional; missing
/// values fall back to built-in defaults.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub jobs: Option<usize>,
    pub strict: Option<bool>,
    pub tokenizer: Option<TokenizerSpec>,
    #[serde(default)]
    pub pagination: PaginationSection,
    #[serde(default)]
    pub render: RenderSection,
    #[serde(default)]
    pub partition: PartitionSection,
    #[serde(default)]
    pub stats: StatsSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaginationSection {
    pub n_line: Option<u32>,
    pub n_text: Option<u32>,
    pub n_image: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderSection {
    pub command: Option<String>,
    /// Seconds.
    pub timeout: Option<f64>,
    pub theme: Option<Theme>,
    pub force: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSection {
    pub size: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StatsSection {
    pub sample: Option<usize>,
    pub seed: Option<u64>,
}

/// `whitespace` or `vocab:<path>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenizerSpec {
    Whitespace,
    Vocab(PathBuf),
}

impl FromStr for TokenizerSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once(':') {
            None if s == "whitespace" => Ok(TokenizerSpec::Whitespace),
            Some(("vocab", path)) if !path.is_empty() => Ok(TokenizerSpec::Vocab(path.into())),
            _ => Err(format!("unknown tokenizer {s:?} (expected `whitespace` or `vocab:<path>`)")),
        }
    }
}

impl<'de> Deserialize<'de> for TokenizerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

impl TokenizerSpec {
    pub fn load(&self) -> Result<Box<dyn Tokenizer>, CliError> {
        match self {
            TokenizerSpec::Whitespace => Ok(Box::new(WhitespaceTokenizer)),
            TokenizerSpec::Vocab(path) => Ok(Box::new(VocabTokenizer::from_file(path).map_err(CliError::io)?)),
        }
    }
}

impl FileConfig {
    /// Load `explicit` if given, else `pin.toml` in the working directory
    /// when present, else defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self, CliError> {
        let path = match explicit {
            Some(p) => p.to_path_buf(),
            None if Path::new(DEFAULT_CONFIG).is_file() => PathBuf::from(DEFAULT_CONFIG),
            None => return Ok(Self::default()),
        };
        let text = fs::read_to_string(&path)
            .map_err(|e| CliError::io(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: FileConfig = toml::from_str(&text)
            .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        cfg.check().map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    fn check(&self) -> Result<(), String> {
        if self.jobs == Some(0) {
            return Err("jobs must be at least 1".into());
        }
        if self.partition.size == Some(0) {
            return Err("partition.size must be at least 1".into());
        }
        if let Some(t) = self.render.timeout {
            if !(t > 0.0 && t.is_finite()) {
                return Err("render.timeout must be a positive number of seconds".into());
            }
        }
        self.page_params(PageOverrides::default()).validate().map_err(|e| e.to_string())?;
        if let Some(cmd) = &self.render.command {
            RendererConfig::new(cmd.clone()).validate().map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn jobs(&self, flag: Option<usize>) -> usize {
        flag.or(self.jobs).unwrap_or_else(default_jobs).max(1)
    }

    pub fn strict(&self, flag: bool) -> bool {
        flag || self.strict.unwrap_or(false)
    }

    pub fn tokenizer(&self, flag: Option<&TokenizerSpec>) -> TokenizerSpec {
        flag.or(self.tokenizer.as_ref()).cloned().unwrap_or(TokenizerSpec::Whitespace)
    }

    pub fn page_params(&self, flags: PageOverrides) -> PageParams {
        let d = PageParams::default();
        PageParams {
            n_line: flags.n_line.or(self.pagination.n_line).unwrap_or(d.n_line),
            n_text: flags.n_text.or(self.pagination.n_text).unwrap_or(d.n_text),
            n_image: flags.n_image.or(self.pagination.n_image).unwrap_or(d.n_image),
        }
    }

    pub fn renderer(&self, command: Option<&str>, timeout: Option<f64>, force: bool) -> Result<RendererConfig, CliError> {
        let command = command
            .map(str::to_owned)
            .or_else(|| self.render.command.clone())
            .ok_or_else(|| CliError::usage("no renderer command: pass --command or set render.command"))?;
        let mut cfg = RendererConfig::new(command);
        if let Some(secs) = timeout.or(self.render.timeout) {
            cfg.timeout = Duration::try_from_secs_f64(secs)
                .ok()
                .filter(|d| !d.is_zero())
                .ok_or_else(|| CliError::usage("timeout must be a positive number of seconds"))?;
        }
        cfg.theme = self.render.theme.unwrap_or_default();
        cfg.force = force || self.render.force.unwrap_or(false);
        cfg.validate().map_err(CliError::usage)?;
        Ok(cfg)
    }

    pub fn partition_size(&self, flag: Option<usize>) -> usize {
        flag.or(self.partition.size).unwrap_or(10_000)
    }

    pub fn sample(&self, flag: Option<usize>) -> usize {
        flag.or(self.stats.sample).unwrap_or(pin_forge::stats::DEFAULT_SAMPLE)
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.stats.seed).unwrap_or(pin_forge::stats::DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PageOverrides {
    pub n_line: Option<u32>,
    pub n_text: Option<u32>,
    pub n_image: Option<u32>,
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}
