//! Mixing, splits, manifests and dataset builds.
//!
//! On disk a dataset is `manifest.json` plus `pieces/<id>/<part>.wav` and
//! `pieces/<id>/mix.wav`, all mono float32 at the manifest sample rate.

mod build;
mod manifest;
mod mix;
mod segments;
mod split;

use std::io;
use std::path::Path;

use thiserror::Error;

use crate::audio::AudioError;

pub use build::{build_dataset, plan_build, rendition_id, BuildConfig, BuildOutcome, PlannedPiece, SourcePiece, STATE_FILE};
pub use manifest::{
    mixture_path, stem_path, DatasetManifest, FailedPiece, FitSummary, PieceEntry, MANIFEST_FILE,
    MANIFEST_VERSION,
};
pub use mix::{mix, Mix, MixPolicy};
pub use segments::{extract_segments, Segment, SegmentSampler};
pub use split::{split, Split, SplitConfig, SplitSizes};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("part '{part}': {got} samples, expected {expected}")]
    LengthMismatch {
        part: String,
        expected: usize,
        got: usize,
    },
    #[error("split: {0}")]
    Split(String),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

impl DatasetError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
