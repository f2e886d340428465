use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetError, Split};
use crate::expression::Mode;
use crate::score_io::PartName;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

/// Index of a rendered dataset. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub version: u32,
    pub sample_rate: u32,
    pub mode: Mode,
    pub pieces: Vec<PieceEntry>,
    #[serde(default)]
    pub failed: Vec<FailedPiece>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceEntry {
    pub id: String,
    /// Source score the rendition was derived from; splits are assigned per source.
    pub source: String,
    pub split: Split,
    pub transpose_offset: i32,
    pub seed: u64,
    /// Bank name per part.
    pub banks: BTreeMap<PartName, String>,
    pub tempo_bpm: f64,
    pub duration_s: f64,
    pub num_samples: usize,
    /// Gain applied jointly to stems and mixture.
    pub gain: f32,
    pub stems: BTreeMap<PartName, PathBuf>,
    pub mixture: PathBuf,
    pub fit: FitSummary,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSummary {
    /// Notes moved by whole octaves into range.
    pub altered: usize,
    /// Notes with no in-range octave, clamped to the range edge.
    pub clamped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailedPiece {
    pub id: String,
    pub source: String,
    pub transpose_offset: i32,
    pub error: String,
}

/// Dataset-relative path of one stem.
pub fn stem_path(id: &str, part: &PartName) -> PathBuf {
    Path::new("pieces").join(id).join(format!("{}.wav", part.as_str()))
}

pub fn mixture_path(id: &str) -> PathBuf {
    Path::new("pieces").join(id).join("mix.wav")
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, DatasetError> {
        let m: DatasetManifest =
            serde_json::from_str(text).map_err(|e| DatasetError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|e| DatasetError::io(path, e))?;
        Self::from_json(&text)
    }

    /// Unique ids, and every rendition of a source in the same split.
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.version != MANIFEST_VERSION {
            return Err(DatasetError::Manifest(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        let mut ids = BTreeMap::new();
        let mut sources: BTreeMap<&str, Split> = BTreeMap::new();
        for p in &self.pieces {
            if ids.insert(p.id.as_str(), ()).is_some() {
                return Err(DatasetError::Manifest(format!("duplicate piece id '{}'", p.id)));
            }
            if let Some(prev) = sources.insert(&p.source, p.split) {
                if prev != p.split {
                    return Err(DatasetError::Manifest(format!(
                        "source '{}' appears in both {prev} and {}",
                        p.source, p.split
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &PieceEntry> {
        self.pieces.iter().filter(move |p| p.split == split)
    }

    pub fn piece(&self, id: &str) -> Option<&PieceEntry> {
        self.pieces.iter().find(|p| p.id == id)
    }

    /// Total rendered audio in seconds.
    pub fn total_duration_s(&self) -> f64 {
        self.pieces.iter().map(|p| p.num_samples as f64 / self.sample_rate as f64).sum()
    }
}
