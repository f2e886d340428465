use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use log::warn;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetError, DatasetManifest, Split};
use crate::audio::read_wav;
use crate::score_io::PartName;

/// Aligned slices of one piece's mixture and stems.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub piece_id: String,
    pub start: usize,
    pub mixture: Vec<f32>,
    pub stems: BTreeMap<PartName, Vec<f32>>,
}

struct LoadedPiece {
    id: String,
    mixture: Vec<f32>,
    stems: BTreeMap<PartName, Vec<f32>>,
}

/// Endless stream of random training windows from one split: a uniformly
/// chosen piece, then a uniform start such that the window fits.
pub struct SegmentSampler {
    pieces: Vec<LoadedPiece>,
    len: usize,
    rng: ChaCha8Rng,
}

fn load(root: &Path, rel: &PathBuf, sample_rate: u32) -> Result<Vec<f32>, DatasetError> {
    let mono = read_wav(&root.join(rel))?;
    if mono.sample_rate != sample_rate {
        return Err(DatasetError::Manifest(format!(
            "{} is at {} Hz, manifest says {sample_rate} Hz",
            rel.display(),
            mono.sample_rate
        )));
    }
    Ok(mono.samples)
}

impl SegmentSampler {
    pub fn segment_len(&self) -> usize {
        self.len
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }
}

impl Iterator for SegmentSampler {
    type Item = Segment;

    fn next(&mut self) -> Option<Segment> {
        if self.pieces.is_empty() {
            return None;
        }
        let piece = &self.pieces[self.rng.random_range(0..self.pieces.len())];
        let start = self.rng.random_range(0..=piece.mixture.len() - self.len);
        let range = start..start + self.len;
        Some(Segment {
            piece_id: piece.id.clone(),
            start,
            mixture: piece.mixture[range.clone()].to_vec(),
            stems: piece
                .stems
                .iter()
                .map(|(p, a)| (p.clone(), a[range.clone()].to_vec()))
                .collect(),
        })
    }
}

/// Load every piece of `split` under `root`; pieces shorter than one window are skipped with a warning.
pub fn extract_segments(
    manifest: &DatasetManifest,
    root: &Path,
    split: Split,
    segment_s: f64,
    rng: ChaCha8Rng,
) -> Result<SegmentSampler, DatasetError> {
    let len = (segment_s * manifest.sample_rate as f64).round() as usize;
    if len == 0 {
        return Err(DatasetError::Config("segment length must be positive".into()));
    }
    let mut pieces = vec![];
    for entry in manifest.split(split) {
        let mixture = load(root, &entry.mixture, manifest.sample_rate)?;
        if mixture.len() < len {
            warn!("{}: {} samples, shorter than one {segment_s} s segment; skipped", entry.id, mixture.len());
            continue;
        }
        let mut stems = BTreeMap::new();
        for (part, rel) in &entry.stems {
            let audio = load(root, rel, manifest.sample_rate)?;
            if audio.len() != mixture.len() {
                return Err(DatasetError::LengthMismatch {
                    part: format!("{}/{part}", entry.id),
                    expected: mixture.len(),
                    got: audio.len(),
                });
            }
            stems.insert(part.clone(), audio);
        }
        pieces.push(LoadedPiece {
            id: entry.id.clone(),
            mixture,
            stems,
        });
    }
    if pieces.is_empty() {
        return Err(DatasetError::Split(format!("no usable pieces in split '{split}'")));
    }
    Ok(SegmentSampler { pieces, len, rng })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::build::tests::{banks, satb};
    use crate::dataset::{build_dataset, BuildConfig, SourcePiece, SplitConfig, SplitSizes};
    use crate::range_transform::TransposeSet;

    #[test]
    fn windows_fit_are_reproducible_and_additive() {
        let dir = tempfile::tempdir().unwrap();
        // 20 beats at 120 bpm: exactly 10 s.
        let sources = vec![SourcePiece { id: "p".into(), score: satb(20, 0) }];
        let cfg = BuildConfig {
            transpose: TransposeSet::new(vec![0]).unwrap(),
            split: SplitConfig {
                seed: 0,
                sizes: SplitSizes::Counts { train: 1, valid: 0, test: 0 },
            },
            ..BuildConfig::default()
        };
        let m = build_dataset(&sources, &banks(22050), &cfg, dir.path(), None).unwrap().manifest;
        assert_eq!(m.pieces[0].num_samples, 220500);
        let draw = || {
            extract_segments(&m, dir.path(), Split::Train, 2.0, crate::rng::stream(5, &["segments"]))
                .unwrap()
                .take(100)
                .collect::<Vec<_>>()
        };
        let a = draw();
        assert_eq!(a, draw());
        for seg in &a {
            assert_eq!(seg.mixture.len(), 44100);
            assert!(seg.start <= 176400);
            for (i, &v) in seg.mixture.iter().enumerate() {
                let sum: f32 = seg.stems.values().map(|s| s[i]).sum();
                assert!((v - sum).abs() < 1e-6);
            }
        }
        assert!(extract_segments(&m, dir.path(), Split::Test, 2.0, crate::rng::stream(5, &[])).is_err());
        assert!(extract_segments(&m, dir.path(), Split::Train, 11.0, crate::rng::stream(5, &[])).is_err());
    }
}
