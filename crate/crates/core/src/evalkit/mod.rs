//! Separation metrics and the median-SDR evaluation protocol.
//!
//! Estimates live at `<root>/<piece id>/<part>.wav`, next to a dataset
//! manifest that names the reference stems.

mod metrics;
mod oracle;
mod report;
mod stft;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::score_io::PartName;

pub use metrics::{sdr, si_sdr, Metric, SILENCE_RMS};
pub use oracle::{oracle_masks, oracle_separate, OracleKind, IRM_EPS};
pub use report::{median, median_sdr, quantile, Db, PartReport, SdrReport, TrackAudio, TrackReport};
pub use stft::{istft, stft, Spectrogram, StftConfig};

pub const DEFAULT_SEGMENT_S: f64 = 2.0;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("empty audio")]
    EmptyAudio,
    #[error("signal of {len} samples is shorter than the {window}-sample window")]
    TooShort { len: usize, window: usize },
    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("reference is silent (below -60 dBFS RMS)")]
    SilentReference,
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Path of the estimate for one part of one piece.
pub fn estimate_path(root: &Path, piece_id: &str, part: &PartName) -> PathBuf {
    root.join(piece_id).join(format!("{}.wav", part.as_str()))
}
