//! Sample-playback rendering of expressive performances.
//!
//! A [`SampleBank`] is one instrument: pitch zones keyed by syllable (vocal
//! banks) or by [`DEFAULT_ZONE_KEY`] (piano-like banks). Banks come either
//! from a directory of WAV files plus a `bank.toml` description, or from the
//! procedural [`test_bank`] which needs no assets.

mod bank;
mod procedural;
mod render;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioError;
use crate::range_transform::PitchRange;
use crate::score_io::PartName;

pub use bank::{load_bank, load_bank_cached, BankDescription, ZoneDescription, BANK_FILE};
pub use procedural::{formants, test_bank, Waveform};
pub use render::{render_part, render_score};

/// Zone key used by banks that ignore syllables.
pub const DEFAULT_ZONE_KEY: &str = "default";

#[derive(Debug, Error)]
pub enum BankError {
    #[error("bank '{bank}': no zone for pitch {pitch} (key '{key}')")]
    Gap { bank: String, key: String, pitch: u8 },
    #[error("bank '{bank}': syllable '{syllable}' has no zones")]
    MissingSyllable { bank: String, syllable: String },
    #[error("bank '{bank}': {reason}")]
    InvalidZone { bank: String, reason: String },
    #[error("bank description {path}: {reason}")]
    Description { path: String, reason: String },
    #[error(transparent)]
    Audio(#[from] AudioError),
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("part '{part}': pitch {pitch} outside bank '{bank}' range {range}")]
    PitchOutOfRange {
        part: String,
        bank: String,
        pitch: u8,
        range: PitchRange,
    },
    #[error("part '{part}': bank '{bank}' has no zones for syllable '{syllable}'")]
    UnknownSyllable {
        part: String,
        bank: String,
        syllable: String,
    },
    #[error("no bank assigned to part '{0}'")]
    NoBank(String),
    #[error("invalid render config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VelocityCurve {
    /// gain = v / 127
    #[default]
    Linear,
    /// gain = (v / 127)^2
    Squared,
}

impl VelocityCurve {
    pub fn gain(self, velocity: u8) -> f32 {
        let v = velocity.min(127) as f32 / 127.0;
        match self {
            VelocityCurve::Linear => v,
            VelocityCurve::Squared => v * v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderConfig {
    pub sample_rate: u32,
    pub attack_ms: f64,
    pub release_ms: f64,
    pub legato_crossfade: bool,
    /// Stems peaking above this are reported; gain itself is owned by the mix stage.
    pub peak_target: f32,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            sample_rate: 22050,
            attack_ms: 5.0,
            release_ms: 30.0,
            legato_crossfade: true,
            peak_target: 0.98,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<(), RenderError> {
        if self.sample_rate == 0 {
            return Err(RenderError::Config("sample_rate must be positive".into()));
        }
        if !(self.attack_ms >= 0.0 && self.release_ms >= 0.0) {
            return Err(RenderError::Config("attack/release must be non-negative".into()));
        }
        if !(self.peak_target > 0.0 && self.peak_target <= 1.0) {
            return Err(RenderError::Config("peak_target must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// One pitch zone: a mono sample played back transposed relative to `root_pitch`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleZone {
    pub root_pitch: u8,
    pub low: u8,
    pub high: u8,
    pub audio: Arc<[f32]>,
    /// Rate the sample data was recorded at; playback speed scales by this over the render rate.
    pub sample_rate: f64,
    /// Sustain loop `[start, end)` in sample indices.
    pub loop_points: Option<(usize, usize)>,
}

impl SampleZone {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.low <= self.root_pitch && self.root_pitch <= self.high) {
            return Err(format!(
                "zone root {} outside {}..={}",
                self.root_pitch, self.low, self.high
            ));
        }
        if self.audio.is_empty() {
            return Err("zone has no audio".into());
        }
        if !(self.sample_rate > 0.0) {
            return Err("zone sample rate must be positive".into());
        }
        if let Some((start, end)) = self.loop_points {
            if end <= start || end > self.audio.len() {
                return Err(format!(
                    "loop {start}..{end} invalid for {} samples",
                    self.audio.len()
                ));
            }
        }
        Ok(())
    }

    pub fn covers(&self, pitch: u8) -> bool {
        (self.low..=self.high).contains(&pitch)
    }

    pub fn peak(&self) -> f32 {
        crate::audio::peak(&self.audio)
    }
}

/// An immutable, validated instrument.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleBank {
    name: String,
    zones: BTreeMap<String, Vec<SampleZone>>,
    pitch_range: PitchRange,
    velocity_gain_curve: VelocityCurve,
    syllables: Vec<String>,
}

impl SampleBank {
    /// Validate zones, coverage of `pitch_range` for every key, and presence of every declared syllable.
    pub fn new(
        name: impl Into<String>,
        zones: BTreeMap<String, Vec<SampleZone>>,
        pitch_range: PitchRange,
        velocity_gain_curve: VelocityCurve,
        syllables: Vec<String>,
    ) -> Result<Self, BankError> {
        let name = name.into();
        for list in zones.values() {
            for zone in list {
                zone.validate().map_err(|reason| BankError::InvalidZone {
                    bank: name.clone(),
                    reason,
                })?;
            }
        }
        for syllable in &syllables {
            if !zones.contains_key(syllable) {
                return Err(BankError::MissingSyllable {
                    bank: name.clone(),
                    syllable: syllable.clone(),
                });
            }
        }
        if zones.is_empty() {
            return Err(BankError::InvalidZone {
                bank: name,
                reason: "bank has no zones".into(),
            });
        }
        for (key, list) in &zones {
            for pitch in pitch_range.low()..=pitch_range.high() {
                if !list.iter().any(|z| z.covers(pitch)) {
                    return Err(BankError::Gap {
                        bank: name.clone(),
                        key: key.clone(),
                        pitch,
                    });
                }
            }
        }
        Ok(Self {
            name,
            zones,
            pitch_range,
            velocity_gain_curve,
            syllables,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn pitch_range(&self) -> PitchRange {
        self.pitch_range
    }

    pub fn velocity_gain_curve(&self) -> VelocityCurve {
        self.velocity_gain_curve
    }

    pub fn syllables(&self) -> &[String] {
        &self.syllables
    }

    pub fn zone_keys(&self) -> impl Iterator<Item = &str> {
        self.zones.keys().map(String::as_str)
    }

    pub fn zone_sets(&self) -> usize {
        self.zones.len()
    }

    /// Zone for `(pitch, syllable)`: the syllable's own zones, else the default key.
    /// Among covering zones the one with the closest root wins.
    pub fn zone_for(&self, pitch: u8, syllable: &str) -> Option<&SampleZone> {
        let list = self
            .zones
            .get(syllable)
            .or_else(|| self.zones.get(DEFAULT_ZONE_KEY))?;
        list.iter()
            .filter(|z| z.covers(pitch))
            .min_by_key(|z| z.root_pitch.abs_diff(pitch))
    }

    pub fn has_key_for(&self, syllable: &str) -> bool {
        self.zones.contains_key(syllable) || self.zones.contains_key(DEFAULT_ZONE_KEY)
    }

    /// Content hash over every zone and setting; changes whenever rendering could change.
    pub fn fingerprint(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update([self.pitch_range.low(), self.pitch_range.high()]);
        h.update([self.velocity_gain_curve as u8]);
        for s in &self.syllables {
            h.update(s.as_bytes());
            h.update([0]);
        }
        for (key, list) in &self.zones {
            h.update(key.as_bytes());
            h.update([0]);
            for z in list {
                h.update([z.root_pitch, z.low, z.high]);
                h.update(z.sample_rate.to_le_bytes());
                if let Some((a, b)) = z.loop_points {
                    h.update((a as u64).to_le_bytes());
                    h.update((b as u64).to_le_bytes());
                }
                h.update((z.audio.len() as u64).to_le_bytes());
                for s in z.audio.iter() {
                    h.update(s.to_le_bytes());
                }
            }
        }
        hex(&h.finalize())
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Banks assigned to the parts of a score.
pub type BankSet = BTreeMap<PartName, Arc<SampleBank>>;
