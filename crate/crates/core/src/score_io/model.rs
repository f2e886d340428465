use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ScoreError;

/// Tempo assumed when a file carries no tempo event.
pub const DEFAULT_TEMPO_BPM: f64 = 90.0;

/// Resolution used by the text format and by exports when none is given.
pub const DEFAULT_TICKS_PER_QUARTER: u16 = 480;

/// A single symbolic note in MIDI tick time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Note {
    pub onset_ticks: u32,
    pub duration_ticks: u32,
    pub pitch: u8,
    pub velocity: u8,
}

impl Note {
    pub fn new(onset_ticks: u32, duration_ticks: u32, pitch: u8, velocity: u8) -> Self {
        Self {
            onset_ticks,
            duration_ticks,
            pitch,
            velocity,
        }
    }

    pub fn offset_ticks(&self) -> u32 {
        self.onset_ticks + self.duration_ticks
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.duration_ticks == 0 {
            return Err(format!("note at tick {} has zero duration", self.onset_ticks));
        }
        if self.pitch > 127 {
            return Err(format!("pitch {} outside 0..=127", self.pitch));
        }
        if !(1..=127).contains(&self.velocity) {
            return Err(format!(
                "velocity {} at tick {} outside 1..=127",
                self.velocity, self.onset_ticks
            ));
        }
        Ok(())
    }
}

/// Label of a voice part. The four SATB parts are named; anything else is kept verbatim.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PartName {
    Soprano,
    Alto,
    Tenor,
    Bass,
    Other(String),
}

impl PartName {
    pub const SATB: [PartName; 4] = [
        PartName::Soprano,
        PartName::Alto,
        PartName::Tenor,
        PartName::Bass,
    ];

    pub fn as_str(&self) -> &str {
        match self {
            PartName::Soprano => "soprano",
            PartName::Alto => "alto",
            PartName::Tenor => "tenor",
            PartName::Bass => "bass",
            PartName::Other(s) => s,
        }
    }

    /// Default label for the `index`-th non-empty track when no name pattern matched.
    pub fn by_order(index: usize) -> PartName {
        match index {
            0..=3 => Self::SATB[index].clone(),
            n => PartName::Other(format!("part{}", n + 1)),
        }
    }

    /// Capitalized form used in report tables.
    pub fn title(&self) -> String {
        let s = self.as_str();
        let mut chars = s.chars();
        match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    }
}

impl fmt::Display for PartName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartName {
    type Err = ScoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if trimmed.is_empty() || trimmed.chars().any(|c| c.is_whitespace() || c == '/') {
            return Err(ScoreError::InvalidPartName(s.to_string()));
        }
        Ok(match trimmed.to_ascii_lowercase().as_str() {
            "soprano" => PartName::Soprano,
            "alto" => PartName::Alto,
            "tenor" => PartName::Tenor,
            "bass" => PartName::Bass,
            _ => PartName::Other(trimmed.to_string()),
        })
    }
}

impl Serialize for PartName {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PartName {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One monophonic voice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoicePart {
    pub name: PartName,
    pub notes: Vec<Note>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub breath_breaks: Option<Vec<u32>>,
}

impl VoicePart {
    pub fn new(name: PartName, notes: Vec<Note>) -> Self {
        Self {
            name,
            notes,
            breath_breaks: None,
        }
    }

    /// Checks note validity, ordering and monophonicity.
    pub fn validate(&self) -> Result<(), ScoreError> {
        for note in &self.notes {
            note.validate().map_err(|reason| ScoreError::InvalidNote {
                part: self.name.to_string(),
                reason,
            })?;
        }
        for pair in self.notes.windows(2) {
            if pair[1].onset_ticks < pair[0].onset_ticks {
                return Err(ScoreError::Unsorted {
                    part: self.name.to_string(),
                    tick: pair[1].onset_ticks,
                });
            }
            if pair[1].onset_ticks < pair[0].offset_ticks() {
                return Err(ScoreError::Polyphonic {
                    part: self.name.to_string(),
                    tick: pair[1].onset_ticks,
                });
            }
        }
        Ok(())
    }

    pub fn end_ticks(&self) -> u32 {
        self.notes.last().map_or(0, Note::offset_ticks)
    }
}

/// A tempo-annotated multi-part piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub parts: Vec<VoicePart>,
    pub ticks_per_quarter: u16,
    pub tempo_bpm: f64,
}

impl Score {
    /// Builds a score and checks every invariant.
    pub fn new(
        parts: Vec<VoicePart>,
        ticks_per_quarter: u16,
        tempo_bpm: f64,
    ) -> Result<Self, ScoreError> {
        let score = Self {
            parts,
            ticks_per_quarter,
            tempo_bpm,
        };
        score.validate()?;
        Ok(score)
    }

    pub fn validate(&self) -> Result<(), ScoreError> {
        if self.parts.is_empty() {
            return Err(ScoreError::NoParts);
        }
        if self.ticks_per_quarter == 0 {
            return Err(ScoreError::InvalidDivision(0));
        }
        if !(self.tempo_bpm.is_finite() && self.tempo_bpm > 0.0) {
            return Err(ScoreError::InvalidTempo(self.tempo_bpm));
        }
        for (i, part) in self.parts.iter().enumerate() {
            if self.parts[..i].iter().any(|p| p.name == part.name) {
                return Err(ScoreError::DuplicatePart(part.name.to_string()));
            }
            part.validate()?;
        }
        Ok(())
    }

    pub fn part(&self, name: &PartName) -> Option<&VoicePart> {
        self.parts.iter().find(|p| &p.name == name)
    }

    pub fn ticks_to_seconds(&self, ticks: u32) -> f64 {
        ticks_to_seconds(ticks, self.ticks_per_quarter, self.tempo_bpm)
    }

    pub fn end_ticks(&self) -> u32 {
        self.parts.iter().map(VoicePart::end_ticks).max().unwrap_or(0)
    }

    pub fn duration_s(&self) -> f64 {
        self.ticks_to_seconds(self.end_ticks())
    }

    pub fn note_count(&self) -> usize {
        self.parts.iter().map(|p| p.notes.len()).sum()
    }
}

/// `seconds = ticks / ticks_per_quarter * 60 / tempo_bpm`
pub fn ticks_to_seconds(ticks: u32, ticks_per_quarter: u16, tempo_bpm: f64) -> f64 {
    (ticks as f64 * 60.0) / (ticks_per_quarter as f64 * tempo_bpm)
}

/// Inverse of [`ticks_to_seconds`], rounded to the nearest tick.
pub fn seconds_to_ticks(seconds: f64, ticks_per_quarter: u16, tempo_bpm: f64) -> u32 {
    let ticks = seconds * tempo_bpm / 60.0 * ticks_per_quarter as f64;
    ticks.round().max(0.0) as u32
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tick_conversion_grid_matches_hand_computation() {
        // (ticks, ppq, bpm, expected seconds) worked out by hand.
        let cases = [
            (480, 480, 60.0, 1.0),
            (480, 480, 120.0, 0.5),
            (480, 480, 90.0, 2.0 / 3.0),
            (960, 480, 90.0, 4.0 / 3.0),
            (7200, 480, 90.0, 10.0),
            (96, 96, 90.0, 2.0 / 3.0),
            (1, 960, 60.0, 1.0 / 960.0),
            (0, 480, 90.0, 0.0),
            (240, 120, 100.0, 1.2),
            (1920, 480, 75.0, 3.2),
        ];
        for (ticks, ppq, bpm, expected) in cases {
            let got = ticks_to_seconds(ticks, ppq, bpm);
            assert!((got - expected).abs() < 1e-12, "{ticks} {ppq} {bpm}: {got}");
        }
        for ppq in [24u16, 96, 120, 384, 480, 960] {
            for bpm in [40.0, 60.0, 72.5, 90.0, 120.0, 208.0] {
                for ticks in [0u32, 1, 7, ppq as u32, 3 * ppq as u32 + 5, 100_000] {
                    let s = ticks_to_seconds(ticks, ppq, bpm);
                    let by_hand = ticks as f64 / ppq as f64 * 60.0 / bpm;
                    assert!((s - by_hand).abs() <= 1e-12 * by_hand.max(1.0));
                    assert_eq!(seconds_to_ticks(s, ppq, bpm), ticks);
                }
            }
        }
    }

    #[test]
    fn overlap_of_forty_ms_is_twenty_nine_ticks() {
        // 0.040 s * 1.5 beats/s * 480 ticks/beat = 28.8
        assert_eq!(seconds_to_ticks(0.040, 480, 90.0), 29);
    }

    #[test]
    fn part_names_parse_case_insensitively() {
        assert_eq!("Soprano".parse::<PartName>().unwrap(), PartName::Soprano);
        assert_eq!("BASS".parse::<PartName>().unwrap(), PartName::Bass);
        assert_eq!(
            "violin1".parse::<PartName>().unwrap(),
            PartName::Other("violin1".into())
        );
        assert!("two words".parse::<PartName>().is_err());
        assert_eq!(PartName::by_order(5), PartName::Other("part6".into()));
        assert_eq!(PartName::Tenor.title(), "Tenor");
    }

    #[test]
    fn score_rejects_zero_parts_and_polyphony() {
        assert!(matches!(
            Score::new(vec![], 480, 90.0),
            Err(ScoreError::NoParts)
        ));
        let chord = VoicePart::new(
            PartName::Alto,
            vec![Note::new(0, 480, 60, 80), Note::new(240, 480, 64, 80)],
        );
        assert!(matches!(
            Score::new(vec![chord], 480, 90.0),
            Err(ScoreError::Polyphonic { tick: 240, .. })
        ));
    }

    #[test]
    fn zero_velocity_is_invalid() {
        let part = VoicePart::new(PartName::Soprano, vec![Note::new(0, 10, 60, 0)]);
        assert!(part.validate().is_err());
    }
}
