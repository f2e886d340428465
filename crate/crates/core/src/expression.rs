//! Expressive performance generation: phrase segmentation, legato overlaps,
//! per-phrase velocity curves and syllable assignment.

use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;
use crate::score_io::{
    channel_for, seconds_to_ticks, MidiExport, MidiNote, MidiSequence, MidiTrack, PartName, Score,
    ScoreError, VoicePart,
};

/// Velocity used for every note when expressiveness is disabled.
pub const STANDARD_VELOCITY: u8 = 96;

#[derive(Debug, Error)]
pub enum ExpressionError {
    #[error("invalid expression config: {0}")]
    Config(String),
    #[error(transparent)]
    Score(#[from] ScoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveType {
    Crescendo,
    Diminuendo,
    CrescDim,
}

impl CurveType {
    /// Curve value in `[0, 1]` at normalized position `x`.
    pub fn shape(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            CurveType::Crescendo => x,
            CurveType::Diminuendo => 1.0 - x,
            CurveType::CrescDim => {
                if x <= 0.5 {
                    2.0 * x
                } else {
                    2.0 * (1.0 - x)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Constant velocity, no overlaps, one syllable.
    Standard,
    #[default]
    Expressive,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Standard => "standard",
            Mode::Expressive => "expressive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpressionConfig {
    /// A rest at least this long (in beats) starts a new phrase.
    pub phrase_gap_beats: f64,
    /// Adjacent notes closer than this interval are sung legato (strict less-than).
    pub legato_interval_semitones: u8,
    pub legato_overlap_ms: f64,
    /// Largest rest (in beats) still treated as "no gap" for legato.
    pub contiguity_tolerance_beats: f64,
    pub velocity_min: u8,
    pub velocity_max: u8,
    pub curve_types: Vec<CurveType>,
    pub syllable_set: Vec<String>,
    pub seed: u64,
}

impl Default for ExpressionConfig {
    fn default() -> Self {
        Self {
            phrase_gap_beats: 0.5,
            legato_interval_semitones: 7,
            legato_overlap_ms: 40.0,
            contiguity_tolerance_beats: 0.0,
            velocity_min: 50,
            velocity_max: 110,
            curve_types: vec![
                CurveType::Crescendo,
                CurveType::Diminuendo,
                CurveType::CrescDim,
            ],
            syllable_set: ["a", "e", "i", "o", "u"].map(String::from).to_vec(),
            seed: 0,
        }
    }
}

impl ExpressionConfig {
    pub fn validate(&self) -> Result<(), ExpressionError> {
        let fail = |m: String| Err(ExpressionError::Config(m));
        if !(self.phrase_gap_beats > 0.0 && self.phrase_gap_beats.is_finite()) {
            return fail(format!("phrase_gap_beats must be positive, got {}", self.phrase_gap_beats));
        }
        if !(self.legato_overlap_ms > 0.0 && self.legato_overlap_ms.is_finite()) {
            return fail(format!("legato_overlap_ms must be positive, got {}", self.legato_overlap_ms));
        }
        if !(self.contiguity_tolerance_beats >= 0.0
            && self.contiguity_tolerance_beats < self.phrase_gap_beats)
        {
            return fail("contiguity_tolerance_beats must lie in [0, phrase_gap_beats)".into());
        }
        if self.velocity_min < 1 || self.velocity_max > 127 || self.velocity_min > self.velocity_max
        {
            return fail(format!(
                "velocity range {}..={} must satisfy 1 <= min <= max <= 127",
                self.velocity_min, self.velocity_max
            ));
        }
        if self.curve_types.is_empty() {
            return fail("curve_types is empty".into());
        }
        if self.syllable_set.is_empty() {
            return fail("syllable_set is empty".into());
        }
        if let Some(bad) = self
            .syllable_set
            .iter()
            .find(|s| s.is_empty() || s.chars().any(char::is_whitespace))
        {
            return fail(format!("syllable '{bad}' must be a non-empty token"));
        }
        Ok(())
    }
}

/// Contiguous run of note indices sung in one breath.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phrase {
    pub note_indices: Range<usize>,
}

impl Phrase {
    pub fn len(&self) -> usize {
        self.note_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.note_indices.is_empty()
    }
}

/// Split a part into phrases, at breath marks when present and otherwise at
/// rests of at least `phrase_gap_beats`.
pub fn segment_phrases(part: &VoicePart, ticks_per_quarter: u16, cfg: &ExpressionConfig) -> Vec<Phrase> {
    let notes = &part.notes;
    if notes.is_empty() {
        return Vec::new();
    }
    let mut starts = vec![0usize];
    match &part.breath_breaks {
        Some(breaks) => {
            for &tick in breaks {
                if let Some(j) = notes.iter().position(|n| n.onset_ticks >= tick) {
                    if j > 0 && !starts.contains(&j) {
                        starts.push(j);
                    }
                }
            }
            starts.sort_unstable();
        }
        None => {
            let threshold = cfg.phrase_gap_beats * ticks_per_quarter as f64;
            for i in 1..notes.len() {
                let rest = notes[i].onset_ticks.saturating_sub(notes[i - 1].offset_ticks());
                if rest as f64 >= threshold {
                    starts.push(i);
                }
            }
        }
    }
    starts
        .iter()
        .zip(starts.iter().skip(1).chain(std::iter::once(&notes.len())))
        .map(|(&a, &b)| Phrase { note_indices: a..b })
        .collect()
}

/// Legato flags: entry `i` is true when note `i` is entered legato from note `i - 1`.
pub fn apply_legato(
    phrases: &[Phrase],
    part: &VoicePart,
    ticks_per_quarter: u16,
    cfg: &ExpressionConfig,
) -> Vec<bool> {
    let tolerance = cfg.contiguity_tolerance_beats * ticks_per_quarter as f64;
    let mut legato = vec![false; part.notes.len()];
    for phrase in phrases {
        for i in phrase.note_indices.start + 1..phrase.note_indices.end {
            let (prev, next) = (&part.notes[i - 1], &part.notes[i]);
            let gap = next.onset_ticks.abs_diff(prev.offset_ticks());
            let interval = next.pitch.abs_diff(prev.pitch);
            legato[i] = gap as f64 <= tolerance && interval < cfg.legato_interval_semitones;
        }
    }
    legato
}

/// Velocities for one phrase under a given curve. Positions are note onsets
/// normalized over the phrase; a single note sits at the midpoint.
pub fn curve_velocities(
    curve: CurveType,
    phrase: &Phrase,
    part: &VoicePart,
    cfg: &ExpressionConfig,
) -> Vec<u8> {
    let notes = &part.notes[phrase.note_indices.clone()];
    let first = notes.first().map_or(0, |n| n.onset_ticks) as f64;
    let last = notes.last().map_or(0, |n| n.onset_ticks) as f64;
    let span = last - first;
    let (lo, hi) = (cfg.velocity_min as f64, cfg.velocity_max as f64);
    notes
        .iter()
        .map(|n| {
            let x = if span > 0.0 {
                (n.onset_ticks as f64 - first) / span
            } else {
                0.5
            };
            let v = (lo + (hi - lo) * curve.shape(x) + 0.5).floor();
            v.clamp(lo, hi) as u8
        })
        .collect()
}

/// Pick a curve uniformly from the configured types and evaluate it.
pub fn apply_velocity_curve<R: Rng + ?Sized>(
    phrase: &Phrase,
    part: &VoicePart,
    cfg: &ExpressionConfig,
    rng: &mut R,
) -> (CurveType, Vec<u8>) {
    let curve = cfg.curve_types[rng.random_range(0..cfg.curve_types.len())];
    (curve, curve_velocities(curve, phrase, part, cfg))
}

/// Draw one syllable per note, with replacement.
pub fn assign_syllables<R: Rng + ?Sized>(
    phrase: &Phrase,
    cfg: &ExpressionConfig,
    rng: &mut R,
) -> Result<Vec<String>, ExpressionError> {
    if cfg.syllable_set.is_empty() {
        return Err(ExpressionError::Config("syllable_set is empty".into()));
    }
    Ok((0..phrase.len())
        .map(|_| cfg.syllable_set[rng.random_range(0..cfg.syllable_set.len())].clone())
        .collect())
}

/// A note in seconds, ready for rendering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressiveNote {
    pub start_s: f64,
    pub end_s: f64,
    pub pitch: u8,
    pub velocity: u8,
    pub syllable: String,
    pub legato_from_prev: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformedPart {
    pub name: PartName,
    pub notes: Vec<ExpressiveNote>,
    /// Curve chosen for each phrase, in phrase order (empty in standard mode).
    pub curves: Vec<CurveType>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Performance {
    pub mode: Mode,
    pub tempo_bpm: f64,
    pub ticks_per_quarter: u16,
    pub parts: Vec<PerformedPart>,
}

impl Performance {
    pub fn duration_s(&self) -> f64 {
        self.parts
            .iter()
            .flat_map(|p| p.notes.iter().map(|n| n.end_s))
            .fold(0.0, f64::max)
    }

    pub fn part(&self, name: &PartName) -> Option<&PerformedPart> {
        self.parts.iter().find(|p| &p.name == name)
    }
}

/// Build a performance. The random stream for each part is keyed by
/// `(cfg.seed, piece_id, part name)`.
pub fn make_performance(
    score: &Score,
    piece_id: &str,
    cfg: &ExpressionConfig,
    mode: Mode,
) -> Result<Performance, ExpressionError> {
    cfg.validate()?;
    score.validate()?;
    let ppq = score.ticks_per_quarter;
    let overlap_s = cfg.legato_overlap_ms / 1000.0;
    let parts = score
        .parts
        .iter()
        .map(|part| {
            let mut notes: Vec<ExpressiveNote> = part
                .notes
                .iter()
                .map(|n| ExpressiveNote {
                    start_s: score.ticks_to_seconds(n.onset_ticks),
                    end_s: score.ticks_to_seconds(n.offset_ticks()),
                    pitch: n.pitch,
                    velocity: STANDARD_VELOCITY,
                    syllable: cfg.syllable_set[0].clone(),
                    legato_from_prev: false,
                })
                .collect();
            let mut curves = Vec::new();
            if mode == Mode::Expressive {
                let phrases = segment_phrases(part, ppq, cfg);
                let legato = apply_legato(&phrases, part, ppq, cfg);
                for i in 1..notes.len() {
                    if legato[i] {
                        // An extended note never outlasts its successor.
                        let next_len = notes[i].end_s - notes[i].start_s;
                        notes[i - 1].end_s = notes[i].start_s + overlap_s.min(0.5 * next_len);
                        notes[i].legato_from_prev = true;
                    }
                }
                let mut stream = rng::stream(cfg.seed, &[piece_id, part.name.as_str()]);
                for phrase in &phrases {
                    let (curve, velocities) = apply_velocity_curve(phrase, part, cfg, &mut stream);
                    let syllables = assign_syllables(phrase, cfg, &mut stream)?;
                    curves.push(curve);
                    for ((i, v), s) in phrase.note_indices.clone().zip(velocities).zip(syllables) {
                        notes[i].velocity = v;
                        notes[i].syllable = s;
                    }
                }
            }
            Ok(PerformedPart {
                name: part.name.clone(),
                notes,
                curves,
            })
        })
        .collect::<Result<Vec<_>, ExpressionError>>()?;
    Ok(Performance {
        mode,
        tempo_bpm: score.tempo_bpm,
        ticks_per_quarter: ppq,
        parts,
    })
}

impl MidiExport for Performance {
    fn to_sequence(&self) -> Result<MidiSequence, ScoreError> {
        let (ppq, bpm) = (self.ticks_per_quarter, self.tempo_bpm);
        let mut tracks = Vec::with_capacity(self.parts.len());
        for (i, part) in self.parts.iter().enumerate() {
            let mut notes = Vec::with_capacity(part.notes.len());
            for n in &part.notes {
                if !(1..=127).contains(&n.velocity) || n.pitch > 127 {
                    return Err(ScoreError::InvalidNote {
                        part: part.name.to_string(),
                        reason: format!("pitch {} velocity {}", n.pitch, n.velocity),
                    });
                }
                let on_tick = seconds_to_ticks(n.start_s, ppq, bpm);
                let off_tick = seconds_to_ticks(n.end_s, ppq, bpm).max(on_tick + 1);
                notes.push(MidiNote {
                    on_tick,
                    off_tick,
                    pitch: n.pitch,
                    velocity: n.velocity,
                    channel: channel_for(i),
                    lyric: Some(n.syllable.clone()),
                });
            }
            tracks.push(MidiTrack {
                name: Some(part.name.to_string()),
                notes,
                markers: Vec::new(),
            });
        }
        Ok(MidiSequence {
            ticks_per_quarter: ppq,
            tempo_bpm: Some(bpm),
            tracks,
        })
    }
}
