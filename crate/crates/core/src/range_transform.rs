//! Octave fitting into playable ranges and semitone transposition.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::score_io::{PartName, Score, VoicePart};

#[derive(Debug, Error)]
pub enum RangeError {
    #[error("invalid pitch range {low}..={high}")]
    InvalidRange { low: u8, high: u8 },
    #[error("transposing by {offset} leaves MIDI range for {} note(s): {}", .notes.len(), describe(.notes))]
    Overflow {
        offset: i32,
        notes: Vec<OutOfRangeNote>,
    },
    #[error("transpose set contains {0} twice")]
    DuplicateOffset(i32),
    #[error("transpose set is empty")]
    EmptySet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutOfRangeNote {
    pub part: PartName,
    pub index: usize,
    pub pitch: u8,
}

fn describe(notes: &[OutOfRangeNote]) -> String {
    notes
        .iter()
        .take(8)
        .map(|n| format!("{}#{} (pitch {})", n.part, n.index, n.pitch))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Inclusive playable MIDI pitch range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRange")]
pub struct PitchRange {
    low: u8,
    high: u8,
}

#[derive(Deserialize)]
struct RawRange {
    low: u8,
    high: u8,
}

impl TryFrom<RawRange> for PitchRange {
    type Error = RangeError;

    fn try_from(raw: RawRange) -> Result<Self, Self::Error> {
        PitchRange::new(raw.low, raw.high)
    }
}

impl PitchRange {
    /// Full 88-key range A0–C8.
    pub const STANDARD_MIDI: PitchRange = PitchRange { low: 21, high: 108 };

    pub fn new(low: u8, high: u8) -> Result<Self, RangeError> {
        if low > high || high > 127 {
            return Err(RangeError::InvalidRange { low, high });
        }
        Ok(Self { low, high })
    }

    pub fn low(&self) -> u8 {
        self.low
    }

    pub fn high(&self) -> u8 {
        self.high
    }

    pub fn contains(&self, pitch: u8) -> bool {
        (self.low..=self.high).contains(&pitch)
    }

    pub fn width(&self) -> u8 {
        self.high - self.low
    }
}

impl fmt::Display for PitchRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.low, self.high)
    }
}

const fn range(low: u8, high: u8) -> PitchRange {
    PitchRange { low, high }
}

/// Range tables of the instrument libraries the defaults are modelled on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangePreset {
    /// A0–C8 for every part (also the piano libraries).
    StandardMidi,
    /// S B3–D6, A E3–G5, T B2–C♯5, B A1–D4.
    VoicesOfRapture,
    /// S/A G3–A5, T/B E2–G4.
    DominusChoir,
}

impl RangePreset {
    /// Range for a SATB part; other labels get the standard MIDI range.
    pub fn range_for(self, part: &PartName) -> PitchRange {
        match (self, part) {
            (RangePreset::VoicesOfRapture, PartName::Soprano) => range(59, 86),
            (RangePreset::VoicesOfRapture, PartName::Alto) => range(52, 79),
            (RangePreset::VoicesOfRapture, PartName::Tenor) => range(47, 73),
            (RangePreset::VoicesOfRapture, PartName::Bass) => range(33, 62),
            (RangePreset::DominusChoir, PartName::Soprano | PartName::Alto) => range(55, 81),
            (RangePreset::DominusChoir, PartName::Tenor | PartName::Bass) => range(40, 67),
            _ => PitchRange::STANDARD_MIDI,
        }
    }

    pub const ALL: [RangePreset; 3] = [
        RangePreset::StandardMidi,
        RangePreset::VoicesOfRapture,
        RangePreset::DominusChoir,
    ];
}

/// Per-part ranges with a preset fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeMap {
    pub preset: RangePreset,
    #[serde(default)]
    pub overrides: BTreeMap<PartName, PitchRange>,
}

impl RangeMap {
    pub fn from_preset(preset: RangePreset) -> Self {
        Self {
            preset,
            overrides: BTreeMap::new(),
        }
    }

    pub fn with_override(mut self, part: PartName, range: PitchRange) -> Self {
        self.overrides.insert(part, range);
        self
    }

    pub fn range_for(&self, part: &PartName) -> PitchRange {
        self.overrides
            .get(part)
            .copied()
            .unwrap_or_else(|| self.preset.range_for(part))
    }
}

impl Default for RangeMap {
    fn default() -> Self {
        Self::from_preset(RangePreset::VoicesOfRapture)
    }
}

/// One note moved by [`octave_fit`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitEntry {
    pub index: usize,
    pub onset_ticks: u32,
    pub from: u8,
    pub to: u8,
    /// No octave of the pitch class fits; the pitch was clamped to the range edge.
    pub clamped: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitReport {
    pub part: Option<PartName>,
    pub altered: Vec<FitEntry>,
}

impl FitReport {
    pub fn is_empty(&self) -> bool {
        self.altered.is_empty()
    }

    pub fn clamped(&self) -> usize {
        self.altered.iter().filter(|e| e.clamped).count()
    }
}

/// Nearest in-range pitch reachable by whole octaves, preferring the downward
/// shift on ties. `None` when no octave of the pitch class lies in range.
pub fn fit_pitch(pitch: u8, range: PitchRange) -> Option<u8> {
    if range.contains(pitch) {
        return Some(pitch);
    }
    let p = pitch as i32;
    (1..=11)
        .flat_map(|k| [p - 12 * k, p + 12 * k])
        .find(|&q| (0..=127).contains(&q) && range.contains(q as u8))
        .map(|q| q as u8)
}

/// Move every out-of-range note by the smallest whole number of octaves that
/// lands inside `range`. Pitches whose class has no octave in range (only
/// possible for ranges narrower than an octave) are clamped to the nearest edge.
pub fn octave_fit(part: &VoicePart, range: PitchRange) -> (VoicePart, FitReport) {
    let mut fitted = part.clone();
    let mut report = FitReport {
        part: Some(part.name.clone()),
        altered: Vec::new(),
    };
    for (index, note) in fitted.notes.iter_mut().enumerate() {
        if range.contains(note.pitch) {
            continue;
        }
        let (to, clamped) = match fit_pitch(note.pitch, range) {
            Some(p) => (p, false),
            None if note.pitch < range.low() => (range.low(), true),
            None => (range.high(), true),
        };
        report.altered.push(FitEntry {
            index,
            onset_ticks: note.onset_ticks,
            from: note.pitch,
            to,
            clamped,
        });
        note.pitch = to;
    }
    (fitted, report)
}

/// Shift every pitch by `offset` semitones.
pub fn transpose(score: &Score, offset: i32) -> Result<Score, RangeError> {
    let mut out = score.clone();
    let mut overflow = Vec::new();
    for part in &mut out.parts {
        for (index, note) in part.notes.iter_mut().enumerate() {
            let p = note.pitch as i32 + offset;
            if (0..=127).contains(&p) {
                note.pitch = p as u8;
            } else {
                overflow.push(OutOfRangeNote {
                    part: part.name.clone(),
                    index,
                    pitch: note.pitch,
                });
            }
        }
    }
    if overflow.is_empty() {
        Ok(out)
    } else {
        Err(RangeError::Overflow {
            offset,
            notes: overflow,
        })
    }
}

/// Ordered set of semitone offsets used for tonality augmentation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct TransposeSet {
    offsets: Vec<i32>,
}

impl TransposeSet {
    pub fn new(offsets: Vec<i32>) -> Result<Self, RangeError> {
        if offsets.is_empty() {
            return Err(RangeError::EmptySet);
        }
        for (i, o) in offsets.iter().enumerate() {
            if offsets[..i].contains(o) {
                return Err(RangeError::DuplicateOffset(*o));
            }
        }
        Ok(Self { offsets })
    }

    /// All integer offsets in `-max..=max`.
    pub fn symmetric(max: u8) -> Self {
        let m = max as i32;
        Self {
            offsets: (-m..=m).collect(),
        }
    }

    pub fn offsets(&self) -> &[i32] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

impl Default for TransposeSet {
    fn default() -> Self {
        Self::symmetric(3)
    }
}

impl TryFrom<Vec<i32>> for TransposeSet {
    type Error = RangeError;

    fn try_from(v: Vec<i32>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<TransposeSet> for Vec<i32> {
    fn from(s: TransposeSet) -> Self {
        s.offsets
    }
}

/// A transposed and range-fitted rendition of a source score.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmentation {
    pub offset: i32,
    pub score: Score,
    pub reports: Vec<FitReport>,
}

impl Augmentation {
    pub fn altered_notes(&self) -> usize {
        self.reports.iter().map(|r| r.altered.len()).sum()
    }

    pub fn clamped_notes(&self) -> usize {
        self.reports.iter().map(FitReport::clamped).sum()
    }
}

/// Transpose then fit a single rendition.
pub fn augment(score: &Score, ranges: &RangeMap, offset: i32) -> Result<Augmentation, RangeError> {
    let mut shifted = transpose(score, offset)?;
    let mut reports = Vec::with_capacity(shifted.parts.len());
    for part in &mut shifted.parts {
        let (fitted, report) = octave_fit(part, ranges.range_for(&part.name));
        *part = fitted;
        reports.push(report);
    }
    Ok(Augmentation {
        offset,
        score: shifted,
        reports,
    })
}

/// One rendition per offset, in set order.
pub fn expand_augmentations(
    score: &Score,
    ranges: &RangeMap,
    set: &TransposeSet,
) -> Result<Vec<Augmentation>, RangeError> {
    set.offsets()
        .iter()
        .map(|&offset| augment(score, ranges, offset))
        .collect()
}
