//! Symbolic score model plus MIDI and plain-text readers/writers.

mod midi;
mod model;
mod text;

use thiserror::Error;

pub use midi::{
    encode_sequence, parse_midi, parse_midi_with, read_sequence, sequence_to_score, write_midi,
    MidiExport, MidiNote, MidiSequence, MidiTrack, PartMapping,
};
pub(crate) use midi::channel_for;
pub use model::{
    seconds_to_ticks, ticks_to_seconds, Note, PartName, Score, VoicePart, DEFAULT_TEMPO_BPM,
    DEFAULT_TICKS_PER_QUARTER,
};
pub use text::{parse_text_score, to_text_score};

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("malformed MIDI at byte {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("unsupported MIDI feature: {0}")]
    Unsupported(String),
    #[error("note-on without note-off in track '{track}' at tick {tick} (pitch {pitch})")]
    UnmatchedNoteOn { track: String, tick: u32, pitch: u8 },
    #[error("part '{part}' is not monophonic: overlapping note at tick {tick}")]
    Polyphonic { part: String, tick: u32 },
    #[error("part '{part}' has notes out of order at tick {tick}")]
    Unsorted { part: String, tick: u32 },
    #[error("invalid note in part '{part}': {reason}")]
    InvalidNote { part: String, reason: String },
    #[error("score must contain at least one part")]
    NoParts,
    #[error("duplicate part '{0}'")]
    DuplicatePart(String),
    #[error("invalid part name '{0}'")]
    InvalidPartName(String),
    #[error("invalid ticks per quarter {0}")]
    InvalidDivision(u16),
    #[error("invalid tempo {0} bpm")]
    InvalidTempo(f64),
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("invalid track-name pattern '{pattern}': {reason}")]
    BadPattern { pattern: String, reason: String },
}
