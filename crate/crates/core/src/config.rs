//! Pipeline configuration file (TOML).
//!
//! ```toml
//! input = "scores"            # .mid, .midi or .txt scores; file stem = piece id
//! output = "dataset"
//! mode = "expressive"         # or "standard"
//! transpose = [-3, -2, -1, 0, 1, 2, 3]
//!
//! [banks]                     # "test" or a bank directory, one per part
//! soprano = "test"
//! bass = "banks/vor-bass"
//!
//! [ranges]
//! preset = "voices_of_rapture"
//! overrides = { tenor = { low = 48, high = 72 } }
//!
//! [expression]
//! seed = 7
//!
//! [split]
//! seed = 1
//! counts = { train = 277, valid = 35, test = 35 }
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{BuildConfig, MixPolicy, SourcePiece, SplitConfig};
use crate::expression::{ExpressionConfig, Mode};
use crate::range_transform::{RangeMap, TransposeSet};
use crate::sampler::{load_bank_cached, test_bank, BankError, BankSet, RenderConfig, BANK_FILE};
use crate::score_io::{parse_midi_with, parse_text_score, PartMapping, PartName, ScoreError};

/// Environment variable naming the directory for resampled bank audio.
pub const CACHE_DIR_ENV: &str = "CHORALFORGE_CACHE_DIR";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("{path}: {source}")]
    Score {
        path: String,
        #[source]
        source: ScoreError,
    },
    #[error("part '{part}': {source}")]
    Bank {
        part: String,
        #[source]
        source: BankError,
    },
}

fn invalid(path: &Path, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum BankSource {
    /// Procedural bank, no assets needed.
    Test,
    Directory(PathBuf),
}

impl From<String> for BankSource {
    fn from(s: String) -> Self {
        if s == "test" {
            BankSource::Test
        } else {
            BankSource::Directory(s.into())
        }
    }
}

impl From<BankSource> for String {
    fn from(b: BankSource) -> Self {
        match b {
            BankSource::Test => "test".into(),
            BankSource::Directory(p) => p.display().to_string(),
        }
    }
}

fn default_banks() -> BTreeMap<PartName, BankSource> {
    PartName::SATB.into_iter().map(|p| (p, BankSource::Test)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub output: PathBuf,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default = "default_banks")]
    pub banks: BTreeMap<PartName, BankSource>,
    /// Track-name patterns mapped to parts, tried before the built-in ones.
    #[serde(default)]
    pub part_patterns: Vec<(String, String)>,
    #[serde(default)]
    pub ranges: RangeMap,
    #[serde(default)]
    pub transpose: TransposeSet,
    #[serde(default)]
    pub expression: ExpressionConfig,
    #[serde(default)]
    pub render: RenderConfig,
    #[serde(default)]
    pub mix: MixPolicy,
    #[serde(default)]
    pub split: SplitConfig,
}

impl PipelineConfig {
    /// Parse a config file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| invalid(path, e.to_string()))?;
        let mut cfg: PipelineConfig = toml::from_str(&text).map_err(|e| invalid(path, e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.input = base.join(&cfg.input);
        cfg.output = base.join(&cfg.output);
        for bank in cfg.banks.values_mut() {
            if let BankSource::Directory(dir) = bank {
                *dir = base.join(&*dir);
            }
        }
        Ok(cfg)
    }

    pub fn build_config(&self) -> BuildConfig {
        BuildConfig {
            mode: self.mode,
            ranges: self.ranges.clone(),
            transpose: self.transpose.clone(),
            expression: self.expression.clone(),
            render: self.render.clone(),
            mix: self.mix.clone(),
            split: self.split.clone(),
        }
    }

    pub fn part_mapping(&self) -> Result<PartMapping, ScoreError> {
        let user = PartMapping::from_patterns(self.part_patterns.iter().map(|(p, n)| (p.as_str(), n.as_str())))?;
        Ok(user.followed_by(PartMapping::default()))
    }

    /// Checks that need no rendering: paths, bank descriptions, nested configs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let here = Path::new("config");
        if !self.input.is_dir() {
            return Err(invalid(&self.input, "input score directory not found"));
        }
        for (part, bank) in &self.banks {
            if let BankSource::Directory(dir) = bank {
                if !dir.join(BANK_FILE).is_file() {
                    return Err(invalid(dir, format!("no {BANK_FILE} for part '{part}'")));
                }
            }
        }
        self.build_config()
            .validate()
            .map_err(|e| invalid(here, e.to_string()))?;
        self.part_mapping().map_err(|e| invalid(here, e.to_string()))?;
        Ok(())
    }

    /// Every score in the input directory, sorted by id.
    pub fn load_sources(&self) -> Result<Vec<SourcePiece>, ConfigError> {
        let mapping = self
            .part_mapping()
            .map_err(|e| invalid(Path::new("part_patterns"), e.to_string()))?;
        let entries = fs::read_dir(&self.input).map_err(|e| invalid(&self.input, e.to_string()))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                    Some("mid" | "midi" | "txt")
                )
            })
            .collect();
        paths.sort();
        let mut sources: Vec<SourcePiece> = Vec::with_capacity(paths.len());
        for path in paths {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| invalid(&path, "file name is not valid UTF-8"))?
                .to_string();
            if sources.iter().any(|s| s.id == id) {
                return Err(invalid(&path, format!("duplicate piece id '{id}'")));
            }
            let score_err = |source| ConfigError::Score {
                path: path.display().to_string(),
                source,
            };
            let is_text = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt"));
            let score = if is_text {
                let text = fs::read_to_string(&path).map_err(|e| invalid(&path, e.to_string()))?;
                parse_text_score(&text).map_err(score_err)?
            } else {
                let bytes = fs::read(&path).map_err(|e| invalid(&path, e.to_string()))?;
                parse_midi_with(&bytes, &mapping).map_err(score_err)?
            };
            sources.push(SourcePiece { id, score });
        }
        if sources.is_empty() {
            return Err(invalid(&self.input, "no .mid, .midi or .txt scores found"));
        }
        Ok(sources)
    }

    /// Load or generate the bank for every configured part.
    pub fn load_banks(&self) -> Result<BankSet, ConfigError> {
        let cache = std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from);
        let mut banks = BankSet::new();
        for (part, source) in &self.banks {
            let bank = match source {
                BankSource::Test => test_bank(part, &self.expression.syllable_set, self.render.sample_rate),
                BankSource::Directory(dir) => load_bank_cached(dir, &self.render, cache.as_deref())
                    .map_err(|source| ConfigError::Bank {
                        part: part.to_string(),
                        source,
                    })?,
            };
            banks.insert(part.clone(), Arc::new(bank));
        }
        Ok(banks)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SplitSizes;

    #[test]
    fn minimal_config_uses_defaults_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pipeline.toml");
        fs::write(&path, "input = \"scores\"\noutput = \"out\"\n").unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.input, dir.path().join("scores"));
        assert_eq!(cfg.mode, Mode::Expressive);
        assert_eq!(cfg.transpose.len(), 7);
        assert_eq!(cfg.banks.len(), 4);
        assert!(matches!(cfg.validate(), Err(ConfigError::Invalid { .. })));
        fs::create_dir(dir.path().join("scores")).unwrap();
        cfg.validate().unwrap();
    }

    #[test]
    fn full_config_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(
            &path,
            r#"
input = "s"
output = "o"
mode = "standard"
transpose = [0, 2]
part_patterns = [["(?i)cantus", "soprano"]]

[banks]
soprano = "test"
bass = "banks/b"

[ranges]
preset = "dominus_choir"
overrides = { tenor = { low = 48, high = 72 } }

[expression]
seed = 7
syllable_set = ["a", "o"]

[render]
sample_rate = 16000

[mix]
peak_target = 0.9

[split]
seed = 1
counts = { train = 2, valid = 0, test = 1 }
"#,
        )
        .unwrap();
        let cfg = PipelineConfig::load(&path).unwrap();
        assert_eq!(cfg.banks[&PartName::Bass], BankSource::Directory(dir.path().join("banks/b")));
        assert_eq!(cfg.transpose.offsets(), &[0, 2]);
        assert_eq!(cfg.ranges.range_for(&PartName::Tenor).low(), 48);
        assert_eq!(cfg.split.sizes, SplitSizes::Counts { train: 2, valid: 0, test: 1 });
        assert_eq!(cfg.render.sample_rate, 16000);
        fs::create_dir(dir.path().join("s")).unwrap();
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("bank.toml"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "input = \"s\"\noutput = \"o\"\ncolour = 3\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
        fs::write(&path, "input = \"s\"\noutput = \"o\"\ntranspose = [1, 1]\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
        fs::write(&path, "input = \"s\"\noutput = \"o\"\n[ranges]\npreset = \"standard_midi\"\noverrides = { bass = { low = 70, high = 60 } }\n").unwrap();
        assert!(PipelineConfig::load(&path).is_err());
    }
}
