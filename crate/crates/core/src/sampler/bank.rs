//! Bank directories: WAV samples plus a `bank.toml` description.
//!
//! ```toml
//! name = "vor-soprano"
//! pitch_range = { low = 59, high = 86 }
//! velocity_gain_curve = "linear"      # or "squared"
//! syllables = ["a", "e", "i", "o", "u"]  # omit for piano-like banks
//!
//! [[zones]]
//! file = "a_60.wav"
//! root = 60
//! low = 59
//! high = 72
//! syllable = "a"        # omit to use the default key
//! loop = [1200, 9800]   # optional, sample indices in the file
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::debug;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{hex, BankError, RenderConfig, SampleBank, SampleZone, VelocityCurve, DEFAULT_ZONE_KEY};
use crate::audio::{self, read_wav, resample_linear, Mono};
use crate::range_transform::PitchRange;

pub const BANK_FILE: &str = "bank.toml";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankDescription {
    pub name: String,
    pub pitch_range: PitchRange,
    #[serde(default)]
    pub velocity_gain_curve: VelocityCurve,
    #[serde(default)]
    pub syllables: Vec<String>,
    pub zones: Vec<ZoneDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneDescription {
    pub file: PathBuf,
    pub root: u8,
    pub low: u8,
    pub high: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub syllable: Option<String>,
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_points: Option<[usize; 2]>,
}

/// Load and validate a bank directory, resampling every sample to `cfg.sample_rate`.
pub fn load_bank(dir: &Path, cfg: &RenderConfig) -> Result<SampleBank, BankError> {
    load_bank_cached(dir, cfg, None)
}

/// As [`load_bank`], keeping resampled audio under `cache_dir` keyed by file content and target rate.
pub fn load_bank_cached(
    dir: &Path,
    cfg: &RenderConfig,
    cache_dir: Option<&Path>,
) -> Result<SampleBank, BankError> {
    let desc_path = dir.join(BANK_FILE);
    let desc_err = |reason: String| BankError::Description {
        path: desc_path.display().to_string(),
        reason,
    };
    let text = fs::read_to_string(&desc_path).map_err(|e| desc_err(e.to_string()))?;
    let desc: BankDescription = toml::from_str(&text).map_err(|e| desc_err(e.to_string()))?;

    let target = cfg.sample_rate;
    let mut zones: BTreeMap<String, Vec<SampleZone>> = BTreeMap::new();
    for z in &desc.zones {
        let path = dir.join(&z.file);
        let mono = load_resampled(&path, target, cache_dir)?;
        let ratio = target as f64 / mono.original_rate as f64;
        let loop_points = z.loop_points.map(|[a, b]| {
            let a = (a as f64 * ratio).round() as usize;
            let b = ((b as f64 * ratio).round() as usize).min(mono.samples.len());
            (a, b)
        });
        let key = z.syllable.clone().unwrap_or_else(|| DEFAULT_ZONE_KEY.to_string());
        zones.entry(key).or_default().push(SampleZone {
            root_pitch: z.root,
            low: z.low,
            high: z.high,
            audio: mono.samples.into(),
            sample_rate: target as f64,
            loop_points,
        });
    }
    SampleBank::new(
        desc.name,
        zones,
        desc.pitch_range,
        desc.velocity_gain_curve,
        desc.syllables,
    )
}

struct Resampled {
    samples: Vec<f32>,
    original_rate: u32,
}

fn load_resampled(path: &Path, target: u32, cache_dir: Option<&Path>) -> Result<Resampled, BankError> {
    let Some(cache) = cache_dir else {
        let Mono { samples, sample_rate } = read_wav(path)?;
        return Ok(Resampled {
            samples: resample_linear(&samples, sample_rate as f64, target as f64),
            original_rate: sample_rate,
        });
    };
    let bytes = fs::read(path).map_err(|source| audio::AudioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut h = Sha256::new();
    h.update(&bytes);
    h.update(target.to_le_bytes());
    let cached = cache.join("resampled").join(format!("{}.wav", hex(&h.finalize())));
    let source = read_wav(path)?;
    if cached.is_file() {
        if let Ok(hit) = read_wav(&cached) {
            debug!("bank cache hit for {}", path.display());
            return Ok(Resampled {
                samples: hit.samples,
                original_rate: source.sample_rate,
            });
        }
    }
    let samples = resample_linear(&source.samples, source.sample_rate as f64, target as f64);
    audio::write_wav_f32(&cached, &samples, target)?;
    Ok(Resampled {
        samples,
        original_rate: source.sample_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::write_wav_i16;

    fn tone(len: usize, rate: u32, hz: f32) -> Vec<f32> {
        (0..len)
            .map(|n| 0.5 * (2.0 * std::f32::consts::PI * hz * n as f32 / rate as f32).sin())
            .collect()
    }

    fn write_bank(dir: &Path, desc: &BankDescription, rate: u32) {
        for z in &desc.zones {
            write_wav_i16(&dir.join(&z.file), &tone(rate as usize / 2, rate, 220.0), rate).unwrap();
        }
        fs::write(dir.join(BANK_FILE), toml::to_string(desc).unwrap()).unwrap();
    }

    fn zone(file: &str, root: u8, low: u8, high: u8, syllable: Option<&str>) -> ZoneDescription {
        ZoneDescription {
            file: file.into(),
            root,
            low,
            high,
            syllable: syllable.map(String::from),
            loop_points: Some([1000, 20000]),
        }
    }

    #[test]
    fn piano_like_bank_resamples_on_load() {
        let dir = tempfile::tempdir().unwrap();
        let desc = BankDescription {
            name: "grand".into(),
            pitch_range: PitchRange::STANDARD_MIDI,
            velocity_gain_curve: VelocityCurve::Squared,
            syllables: vec![],
            zones: vec![zone("c4.wav", 60, 21, 108, None)],
        };
        write_bank(dir.path(), &desc, 44100);
        let bank = load_bank(dir.path(), &RenderConfig::default()).unwrap();
        let z = bank.zone_for(21, "a").unwrap();
        assert_eq!(z.sample_rate, 22050.0);
        assert_eq!(z.audio.len(), 11025);
        assert_eq!(z.loop_points, Some((500, 10000)));
        assert_eq!(bank.velocity_gain_curve(), VelocityCurve::Squared);
    }

    #[test]
    fn gap_in_declared_range_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let desc = BankDescription {
            name: "short".into(),
            pitch_range: PitchRange::new(59, 86).unwrap(),
            velocity_gain_curve: VelocityCurve::Linear,
            syllables: vec![],
            zones: vec![zone("x.wav", 70, 59, 85, None)],
        };
        write_bank(dir.path(), &desc, 22050);
        match load_bank(dir.path(), &RenderConfig::default()) {
            Err(BankError::Gap { pitch, .. }) => assert_eq!(pitch, 86),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn vocal_banks_five_vowels_by_four_parts() {
        use crate::range_transform::RangePreset;
        use crate::score_io::PartName;
        let root = tempfile::tempdir().unwrap();
        let vowels = ["a", "e", "i", "o", "u"];
        let mut sets = 0;
        for part in PartName::SATB {
            let range = RangePreset::VoicesOfRapture.range_for(&part);
            let dir = root.path().join(part.as_str());
            fs::create_dir_all(&dir).unwrap();
            let mid = ((range.low() as u16 + range.high() as u16) / 2) as u8;
            let desc = BankDescription {
                name: format!("vor-{part}"),
                pitch_range: range,
                velocity_gain_curve: VelocityCurve::Linear,
                syllables: vowels.map(String::from).to_vec(),
                zones: vowels
                    .iter()
                    .flat_map(|v| {
                        [
                            zone(&format!("{v}_lo.wav"), range.low(), range.low(), mid, Some(v)),
                            zone(&format!("{v}_hi.wav"), range.high(), mid + 1, range.high(), Some(v)),
                        ]
                    })
                    .collect(),
            };
            write_bank(&dir, &desc, 22050);
            let bank = load_bank(&dir, &RenderConfig::default()).unwrap();
            assert_eq!(bank.pitch_range(), range);
            sets += bank.zone_sets();
        }
        assert_eq!(sets, 20);
        let soprano = RangePreset::VoicesOfRapture.range_for(&PartName::Soprano);
        assert_eq!((soprano.low(), soprano.high()), (59, 86));
    }

    #[test]
    fn missing_description_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            load_bank(dir.path(), &RenderConfig::default()),
            Err(BankError::Description { .. })
        ));
    }

    #[test]
    fn cache_reuses_resampled_audio() {
        let dir = tempfile::tempdir().unwrap();
        let cache = tempfile::tempdir().unwrap();
        let desc = BankDescription {
            name: "c".into(),
            pitch_range: PitchRange::STANDARD_MIDI,
            velocity_gain_curve: VelocityCurve::Linear,
            syllables: vec![],
            zones: vec![zone("c4.wav", 60, 21, 108, None)],
        };
        write_bank(dir.path(), &desc, 48000);
        let cfg = RenderConfig::default();
        let fresh = load_bank(dir.path(), &cfg).unwrap();
        let first = load_bank_cached(dir.path(), &cfg, Some(cache.path())).unwrap();
        let second = load_bank_cached(dir.path(), &cfg, Some(cache.path())).unwrap();
        assert_eq!(fresh, first);
        assert_eq!(first, second);
        assert_eq!(fs::read_dir(cache.path().join("resampled")).unwrap().count(), 1);
    }
}
