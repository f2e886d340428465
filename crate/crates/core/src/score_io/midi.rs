//! Standard MIDI File reading and writing.
//!
//! Only the subset needed for choral scores is interpreted: note on/off,
//! tempo, track names, lyrics and markers. Every other event is skipped
//! but still validated structurally.

use std::collections::{HashMap, VecDeque};

use log::warn;
use regex::Regex;

use super::model::{Note, PartName, Score, VoicePart, DEFAULT_TEMPO_BPM};
use super::ScoreError;

const BREATH_MARKER: &str = "breath";

/// A note as it appears in a file: explicit on and off ticks, possibly overlapping its neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MidiNote {
    pub on_tick: u32,
    pub off_tick: u32,
    pub pitch: u8,
    pub velocity: u8,
    pub channel: u8,
    pub lyric: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MidiTrack {
    pub name: Option<String>,
    pub notes: Vec<MidiNote>,
    pub markers: Vec<(u32, String)>,
}

/// File-level view of an SMF before it is turned into a [`Score`].
#[derive(Debug, Clone, PartialEq)]
pub struct MidiSequence {
    pub ticks_per_quarter: u16,
    pub tempo_bpm: Option<f64>,
    pub tracks: Vec<MidiTrack>,
}

/// Anything that can be written as a type-1 SMF.
pub trait MidiExport {
    fn to_sequence(&self) -> Result<MidiSequence, ScoreError>;
}

/// Maps track names onto voice parts. Patterns are tried in order; tracks that
/// match none are labelled by their position among the non-empty tracks.
#[derive(Debug, Clone)]
pub struct PartMapping {
    patterns: Vec<(Regex, PartName)>,
}

impl PartMapping {
    pub fn new(patterns: Vec<(Regex, PartName)>) -> Self {
        Self { patterns }
    }

    /// Compile `(pattern, part)` pairs.
    pub fn from_patterns<'a, I>(pairs: I) -> Result<Self, ScoreError>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let mut patterns = Vec::new();
        for (pattern, part) in pairs {
            let re = Regex::new(pattern).map_err(|e| ScoreError::BadPattern {
                pattern: pattern.to_string(),
                reason: e.to_string(),
            })?;
            patterns.push((re, part.parse()?));
        }
        Ok(Self { patterns })
    }

    /// Order-only mapping.
    pub fn by_order() -> Self {
        Self { patterns: vec![] }
    }

    /// This mapping's patterns first, then `fallback`'s.
    pub fn followed_by(mut self, fallback: PartMapping) -> Self {
        self.patterns.extend(fallback.patterns);
        self
    }

    fn lookup(&self, name: &str) -> Option<&PartName> {
        self.patterns
            .iter()
            .find(|(re, _)| re.is_match(name))
            .map(|(_, part)| part)
    }
}

impl Default for PartMapping {
    fn default() -> Self {
        Self::from_patterns([
            (r"(?i)^\W*s(op\w*)?\b", "soprano"),
            (r"(?i)^\W*a(lt\w*)?\b", "alto"),
            (r"(?i)^\W*t(en\w*)?\b", "tenor"),
            (r"(?i)^\W*b(as\w*)?\b", "bass"),
        ])
        .expect("built-in patterns compile")
    }
}

/// Parse an SMF into a [`Score`] using the default part mapping.
pub fn parse_midi(bytes: &[u8]) -> Result<Score, ScoreError> {
    parse_midi_with(bytes, &PartMapping::default())
}

pub fn parse_midi_with(bytes: &[u8], mapping: &PartMapping) -> Result<Score, ScoreError> {
    let sequence = read_sequence(bytes)?;
    sequence_to_score(&sequence, mapping)
}

/// Turn a decoded file into a monophonic [`Score`].
pub fn sequence_to_score(
    sequence: &MidiSequence,
    mapping: &PartMapping,
) -> Result<Score, ScoreError> {
    let non_empty: Vec<&MidiTrack> = sequence
        .tracks
        .iter()
        .filter(|t| !t.notes.is_empty())
        .collect();

    let mut labels: Vec<Option<PartName>> = non_empty
        .iter()
        .map(|t| t.name.as_deref().and_then(|n| mapping.lookup(n)).cloned())
        .collect();
    let mut next_order = 0;
    for i in 0..labels.len() {
        if labels[i].is_some() {
            continue;
        }
        loop {
            let candidate = PartName::by_order(next_order);
            next_order += 1;
            if !labels.contains(&Some(candidate.clone())) {
                labels[i] = Some(candidate);
                break;
            }
        }
    }

    let mut parts = Vec::with_capacity(non_empty.len());
    for (track, label) in non_empty.into_iter().zip(labels) {
        let name = label.expect("every track labelled");
        let track_label = track.name.clone().unwrap_or_else(|| name.to_string());
        let mut notes: Vec<Note> = Vec::with_capacity(track.notes.len());
        for n in &track.notes {
            if n.off_tick <= n.on_tick {
                warn!(
                    "track '{track_label}': dropping zero-length note {} at tick {}",
                    n.pitch, n.on_tick
                );
                continue;
            }
            notes.push(Note::new(n.on_tick, n.off_tick - n.on_tick, n.pitch, n.velocity));
        }
        notes.sort_by_key(|n| (n.onset_ticks, n.pitch));
        for pair in notes.windows(2) {
            if pair[1].onset_ticks < pair[0].offset_ticks() {
                return Err(ScoreError::Polyphonic {
                    part: track_label,
                    tick: pair[1].onset_ticks,
                });
            }
        }
        let breaths: Vec<u32> = track
            .markers
            .iter()
            .filter(|(_, text)| text.eq_ignore_ascii_case(BREATH_MARKER))
            .map(|(tick, _)| *tick)
            .collect();
        parts.push(VoicePart {
            name,
            notes,
            breath_breaks: (!breaths.is_empty()).then_some(breaths),
        });
    }

    Score::new(
        parts,
        sequence.ticks_per_quarter,
        sequence.tempo_bpm.unwrap_or(DEFAULT_TEMPO_BPM),
    )
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn err(&self, reason: impl Into<String>) -> ScoreError {
        ScoreError::Malformed {
            offset: self.pos,
            reason: reason.into(),
        }
    }

    fn u8(&mut self) -> Result<u8, ScoreError> {
        let b = *self
            .bytes
            .get(self.pos)
            .ok_or_else(|| self.err("unexpected end of data"))?;
        self.pos += 1;
        Ok(b)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ScoreError> {
        if self.bytes.len() - self.pos < n {
            return Err(self.err(format!("need {n} bytes, {} left", self.bytes.len() - self.pos)));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, ScoreError> {
        let b = self.take(2)?;
        Ok(u16::from_be_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, ScoreError> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn vlq(&mut self) -> Result<u32, ScoreError> {
        let start = self.pos;
        let mut value: u32 = 0;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(ScoreError::Malformed {
            offset: start,
            reason: "variable-length quantity longer than 4 bytes".into(),
        })
    }

    fn data_byte(&mut self) -> Result<u8, ScoreError> {
        let b = self.u8()?;
        if b & 0x80 != 0 {
            self.pos -= 1;
            return Err(self.err(format!("expected data byte, found status {b:#04x}")));
        }
        Ok(b)
    }
}

/// Decode the chunk structure of an SMF.
pub fn read_sequence(bytes: &[u8]) -> Result<MidiSequence, ScoreError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).map_err(|_| r.err("file too short for header"))? != b"MThd" {
        return Err(ScoreError::Malformed {
            offset: 0,
            reason: "missing MThd header".into(),
        });
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(r.err(format!("header length {header_len} < 6")));
    }
    let header_at = r.pos;
    let format = r.u16()?;
    let ntracks = r.u16()?;
    let division = r.u16()?;
    r.pos = header_at + header_len;
    if format > 1 {
        return Err(ScoreError::Unsupported(format!("SMF format {format}")));
    }
    if division & 0x8000 != 0 {
        return Err(ScoreError::Unsupported("SMPTE time division".into()));
    }
    if division == 0 {
        return Err(ScoreError::InvalidDivision(0));
    }

    let mut tracks = Vec::new();
    let mut tempos: Vec<(u32, usize, u32)> = Vec::new();
    while r.pos < bytes.len() && tracks.len() < ntracks as usize {
        let id_at = r.pos;
        let id = r.take(4)?;
        let len = r.u32()? as usize;
        if id != b"MTrk" {
            // Alien chunk: skip.
            r.take(len)?;
            continue;
        }
        let body_start = r.pos;
        if bytes.len() - body_start < len {
            return Err(ScoreError::Malformed {
                offset: id_at,
                reason: format!("track chunk declares {len} bytes past end of file"),
            });
        }
        let mut body = Reader {
            bytes: &bytes[..body_start + len],
            pos: body_start,
        };
        let index = tracks.len();
        let (track, track_tempos) = read_track(&mut body, index)?;
        tempos.extend(track_tempos.into_iter().map(|(t, us)| (t, index, us)));
        tracks.push(track);
        r.pos = body_start + len;
    }
    if tracks.len() < ntracks as usize {
        warn!("header announces {ntracks} tracks, found {}", tracks.len());
    }

    tempos.sort_by_key(|&(tick, track, _)| (tick, track));
    let tempo_bpm = tempos.first().map(|&(_, _, us)| usec_to_bpm(us));
    if tempos.iter().any(|&(_, _, us)| Some(usec_to_bpm(us)) != tempo_bpm) {
        warn!(
            "multiple tempi found; using the first ({:.2} bpm)",
            tempo_bpm.unwrap_or_default()
        );
    }

    if format == 0 && tracks.len() == 1 {
        tracks = split_by_channel(tracks.pop().expect("one track"));
    }

    Ok(MidiSequence {
        ticks_per_quarter: division,
        tempo_bpm,
        tracks,
    })
}

fn usec_to_bpm(us_per_quarter: u32) -> f64 {
    // Microsecond resolution cannot hold most tempi exactly; 0.01 bpm is well inside it.
    let bpm = 60_000_000.0 / us_per_quarter.max(1) as f64;
    (bpm * 100.0).round() / 100.0
}

fn split_by_channel(track: MidiTrack) -> Vec<MidiTrack> {
    let mut channels: Vec<u8> = track.notes.iter().map(|n| n.channel).collect();
    channels.sort_unstable();
    channels.dedup();
    if channels.len() <= 1 {
        return vec![track];
    }
    channels
        .into_iter()
        .map(|ch| MidiTrack {
            name: None,
            notes: track
                .notes
                .iter()
                .filter(|n| n.channel == ch)
                .cloned()
                .collect(),
            markers: track.markers.clone(),
        })
        .collect()
}

fn read_track(r: &mut Reader<'_>, index: usize) -> Result<(MidiTrack, Vec<(u32, u32)>), ScoreError> {
    let mut track = MidiTrack::default();
    let mut tempos = Vec::new();
    let mut open: HashMap<(u8, u8), VecDeque<(u32, u8, Option<String>)>> = HashMap::new();
    let mut pending_lyric: Option<(u32, String)> = None;
    let mut running: Option<u8> = None;
    let mut tick: u32 = 0;

    while r.pos < r.bytes.len() {
        let delta = r.vlq()?;
        tick = tick
            .checked_add(delta)
            .ok_or_else(|| r.err("tick counter overflow"))?;
        let status_at = r.pos;
        let mut status = r.u8()?;
        if status < 0x80 {
            status = running.ok_or_else(|| ScoreError::Malformed {
                offset: status_at,
                reason: "data byte without running status".into(),
            })?;
            r.pos -= 1;
        }
        match status {
            0xFF => {
                running = None;
                let kind = r.u8()?;
                let len = r.vlq()? as usize;
                let data = r.take(len)?;
                match kind {
                    0x2F => break,
                    0x51 => {
                        if len != 3 {
                            return Err(ScoreError::Malformed {
                                offset: status_at,
                                reason: format!("tempo event with length {len}"),
                            });
                        }
                        let us = u32::from_be_bytes([0, data[0], data[1], data[2]]);
                        tempos.push((tick, us));
                    }
                    0x03 if track.name.is_none() => {
                        track.name = Some(text(data));
                    }
                    0x05 => pending_lyric = Some((tick, text(data))),
                    0x06 => track.markers.push((tick, text(data))),
                    _ => {}
                }
            }
            0xF0 | 0xF7 => {
                running = None;
                let len = r.vlq()? as usize;
                r.take(len)?;
            }
            0xF1..=0xFE => {
                return Err(ScoreError::Malformed {
                    offset: status_at,
                    reason: format!("system message {status:#04x} inside a track"),
                });
            }
            _ => {
                running = Some(status);
                let channel = status & 0x0f;
                match status & 0xf0 {
                    0x80 | 0x90 => {
                        let pitch = r.data_byte()?;
                        let velocity = r.data_byte()?;
                        let key = (channel, pitch);
                        if status & 0xf0 == 0x90 && velocity > 0 {
                            let lyric = pending_lyric
                                .take()
                                .filter(|(t, _)| *t == tick)
                                .map(|(_, s)| s);
                            open.entry(key).or_default().push_back((tick, velocity, lyric));
                        } else if let Some((on_tick, vel, lyric)) =
                            open.get_mut(&key).and_then(VecDeque::pop_front)
                        {
                            track.notes.push(MidiNote {
                                on_tick,
                                off_tick: tick,
                                pitch,
                                velocity: vel,
                                channel,
                                lyric,
                            });
                        }
                    }
                    0xA0 | 0xB0 | 0xE0 => {
                        r.data_byte()?;
                        r.data_byte()?;
                    }
                    0xC0 | 0xD0 => {
                        r.data_byte()?;
                    }
                    _ => unreachable!("status byte >= 0x80"),
                }
            }
        }
    }

    if let Some((&(_, pitch), (on_tick, _, _))) = open
        .iter()
        .filter_map(|(k, q)| q.front().map(|v| (k, v)))
        .min_by_key(|(_, v)| v.0)
    {
        return Err(ScoreError::UnmatchedNoteOn {
            track: track.name.clone().unwrap_or_else(|| format!("#{index}")),
            tick: *on_tick,
            pitch,
        });
    }
    track.notes.sort_by_key(|n| (n.on_tick, n.off_tick, n.pitch));
    Ok((track, tempos))
}

fn text(data: &[u8]) -> String {
    String::from_utf8_lossy(data)
        .trim_end_matches('\0')
        .to_string()
}

/// Serialize as a type-1 SMF: a conductor track with the tempo followed by one track per part.
pub fn write_midi<T: MidiExport + ?Sized>(source: &T) -> Result<Vec<u8>, ScoreError> {
    let sequence = source.to_sequence()?;
    Ok(encode_sequence(&sequence))
}

pub fn encode_sequence(sequence: &MidiSequence) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(b"MThd");
    out.extend_from_slice(&6u32.to_be_bytes());
    out.extend_from_slice(&1u16.to_be_bytes());
    out.extend_from_slice(&((sequence.tracks.len() + 1) as u16).to_be_bytes());
    out.extend_from_slice(&sequence.ticks_per_quarter.to_be_bytes());

    let bpm = sequence.tempo_bpm.unwrap_or(DEFAULT_TEMPO_BPM);
    let us = (60_000_000.0 / bpm).round().clamp(1.0, 16_777_215.0) as u32;
    let mut conductor = Vec::new();
    conductor.extend(vlq(0));
    conductor.extend([0xFF, 0x51, 0x03]);
    conductor.extend_from_slice(&us.to_be_bytes()[1..]);
    end_of_track(&mut conductor, 0);
    push_chunk(&mut out, &conductor);

    for track in &sequence.tracks {
        push_chunk(&mut out, &encode_track(track));
    }
    out
}

fn encode_track(track: &MidiTrack) -> Vec<u8> {
    // (tick, order, bytes); at equal ticks releases go first so that
    // back-to-back notes never read as overlapping.
    let mut events: Vec<(u32, u8, Vec<u8>)> = Vec::new();
    for note in &track.notes {
        let ch = note.channel & 0x0f;
        events.push((note.off_tick, 0, vec![0x80 | ch, note.pitch, 0]));
        let mut on = Vec::new();
        if let Some(lyric) = &note.lyric {
            meta(&mut on, 0x05, lyric.as_bytes());
            on.extend(vlq(0));
        }
        on.extend([0x90 | ch, note.pitch, note.velocity]);
        events.push((note.on_tick, 2, on));
    }
    for (tick, marker) in &track.markers {
        let mut m = Vec::new();
        meta(&mut m, 0x06, marker.as_bytes());
        events.push((*tick, 1, m));
    }
    events.sort_by_key(|(tick, order, _)| (*tick, *order));

    let mut body = Vec::new();
    if let Some(name) = &track.name {
        body.extend(vlq(0));
        meta(&mut body, 0x03, name.as_bytes());
    }
    let mut last = 0;
    for (tick, _, bytes) in events {
        body.extend(vlq(tick - last));
        body.extend(bytes);
        last = tick;
    }
    end_of_track(&mut body, 0);
    body
}

fn meta(buf: &mut Vec<u8>, kind: u8, data: &[u8]) {
    buf.extend([0xFF, kind]);
    buf.extend(vlq(data.len() as u32));
    buf.extend_from_slice(data);
}

fn end_of_track(buf: &mut Vec<u8>, delta: u32) {
    buf.extend(vlq(delta));
    buf.extend([0xFF, 0x2F, 0x00]);
}

fn push_chunk(out: &mut Vec<u8>, body: &[u8]) {
    out.extend_from_slice(b"MTrk");
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body);
}

fn vlq(mut value: u32) -> Vec<u8> {
    let mut bytes = vec![(value & 0x7f) as u8];
    value >>= 7;
    while value > 0 {
        bytes.push((value & 0x7f) as u8 | 0x80);
        value >>= 7;
    }
    bytes.reverse();
    bytes
}

/// MIDI channel for the `index`-th part track, skipping the GM percussion channel.
pub(crate) fn channel_for(index: usize) -> u8 {
    let ch = (index % 15) as u8;
    if ch >= 9 {
        ch + 1
    } else {
        ch
    }
}

impl MidiExport for Score {
    fn to_sequence(&self) -> Result<MidiSequence, ScoreError> {
        self.validate()?;
        let tracks = self
            .parts
            .iter()
            .enumerate()
            .map(|(i, part)| MidiTrack {
                name: Some(part.name.to_string()),
                notes: part
                    .notes
                    .iter()
                    .map(|n| MidiNote {
                        on_tick: n.onset_ticks,
                        off_tick: n.offset_ticks(),
                        pitch: n.pitch,
                        velocity: n.velocity,
                        channel: channel_for(i),
                        lyric: None,
                    })
                    .collect(),
                markers: part
                    .breath_breaks
                    .iter()
                    .flatten()
                    .map(|&t| (t, BREATH_MARKER.to_string()))
                    .collect(),
            })
            .collect();
        Ok(MidiSequence {
            ticks_per_quarter: self.ticks_per_quarter,
            tempo_bpm: Some(self.tempo_bpm),
            tracks,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(format: u16, ntracks: u16, ppq: u16) -> Vec<u8> {
        let mut v = b"MThd".to_vec();
        v.extend(6u32.to_be_bytes());
        v.extend(format.to_be_bytes());
        v.extend(ntracks.to_be_bytes());
        v.extend(ppq.to_be_bytes());
        v
    }

    fn chunk(body: &[u8]) -> Vec<u8> {
        let mut v = b"MTrk".to_vec();
        v.extend((body.len() as u32).to_be_bytes());
        v.extend_from_slice(body);
        v
    }

    #[test]
    fn vlq_encoding_matches_reference_values() {
        assert_eq!(vlq(0), vec![0x00]);
        assert_eq!(vlq(0x40), vec![0x40]);
        assert_eq!(vlq(0x7f), vec![0x7f]);
        assert_eq!(vlq(0x80), vec![0x81, 0x00]);
        assert_eq!(vlq(0x2000), vec![0xC0, 0x00]);
        assert_eq!(vlq(0x0FFF_FFFF), vec![0xFF, 0xFF, 0xFF, 0x7F]);
    }

    #[test]
    fn single_note_decodes_directly() {
        let mut file = header(0, 1, 480);
        file.extend(chunk(&[
            0x00, 0x90, 60, 80, // on
            0x83, 0x60, 0x80, 60, 0, // off after 480
            0x00, 0xFF, 0x2F, 0x00,
        ]));
        let score = parse_midi(&file).unwrap();
        assert_eq!(score.parts.len(), 1);
        assert_eq!(score.tempo_bpm, 90.0);
        assert_eq!(score.parts[0].notes, vec![Note::new(0, 480, 60, 80)]);
    }

    #[test]
    fn running_status_and_zero_velocity_off() {
        let mut file = header(0, 1, 96);
        file.extend(chunk(&[
            0x00, 0x90, 60, 80, // on
            0x60, 60, 0, // running-status off
            0x00, 62, 70, // running-status on
            0x60, 62, 0, 0x00, 0xFF, 0x2F, 0x00,
        ]));
        let score = parse_midi(&file).unwrap();
        assert_eq!(
            score.parts[0].notes,
            vec![Note::new(0, 96, 60, 80), Note::new(96, 96, 62, 70)]
        );
    }

    #[test]
    fn header_only_file_has_no_parts() {
        let file = header(1, 0, 480);
        assert!(matches!(parse_midi(&file), Err(ScoreError::NoParts)));
    }

    #[test]
    fn unmatched_note_on_names_track_and_tick() {
        let mut file = header(0, 1, 480);
        file.extend(chunk(&[
            0x00, 0xFF, 0x03, 4, b'A', b'l', b't', b'o', //
            0x81, 0x70, 0x90, 60, 80, // on at 240
            0x00, 0xFF, 0x2F, 0x00,
        ]));
        match parse_midi(&file) {
            Err(ScoreError::UnmatchedNoteOn { track, tick, pitch }) => {
                assert_eq!(track, "Alto");
                assert_eq!(tick, 240);
                assert_eq!(pitch, 60);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chord_in_track_is_a_monophonicity_error() {
        let mut file = header(0, 1, 480);
        file.extend(chunk(&[
            0x00, 0x90, 60, 80, 0x00, 0x90, 64, 80, //
            0x83, 0x60, 0x80, 60, 0, 0x00, 0x80, 64, 0, //
            0x00, 0xFF, 0x2F, 0x00,
        ]));
        assert!(matches!(
            parse_midi(&file),
            Err(ScoreError::Polyphonic { tick: 0, .. })
        ));
    }

    #[test]
    fn truncated_event_reports_byte_offset() {
        let mut file = header(0, 1, 480);
        file.extend(chunk(&[0x00, 0x90, 60]));
        match parse_midi(&file) {
            Err(ScoreError::Malformed { offset, .. }) => assert_eq!(offset, 14 + 8 + 3),
            other => panic!("{other:?}"),
        }
        let mut bad = file.clone();
        bad[0] = b'X';
        assert!(matches!(
            parse_midi(&bad),
            Err(ScoreError::Malformed { offset: 0, .. })
        ));
    }

    #[test]
    fn smpte_division_is_unsupported() {
        let file = header(1, 0, 0xE728);
        assert!(matches!(parse_midi(&file), Err(ScoreError::Unsupported(_))));
    }

    #[test]
    fn first_tempo_wins() {
        let mut file = header(1, 2, 480);
        file.extend(chunk(&[
            0x00, 0xFF, 0x51, 0x03, 0x0A, 0x2C, 0x2B, // 666667 us = 90 bpm
            0x83, 0x60, 0xFF, 0x51, 0x03, 0x07, 0xA1, 0x20, // 120 bpm later
            0x00, 0xFF, 0x2F, 0x00,
        ]));
        file.extend(chunk(&[
            0x00, 0x90, 60, 80, 0x83, 0x60, 0x80, 60, 0, 0x00, 0xFF, 0x2F, 0x00,
        ]));
        assert_eq!(parse_midi(&file).unwrap().tempo_bpm, 90.0);
    }

    #[test]
    fn type_zero_multichannel_splits_into_parts() {
        let mut file = header(0, 1, 480);
        file.extend(chunk(&[
            0x00, 0x90, 72, 80, 0x00, 0x91, 48, 80, //
            0x83, 0x60, 0x80, 72, 0, 0x00, 0x81, 48, 0, //
            0x00, 0xFF, 0x2F, 0x00,
        ]));
        let score = parse_midi(&file).unwrap();
        assert_eq!(score.parts.len(), 2);
        assert_eq!(score.parts[0].name, PartName::Soprano);
        assert_eq!(score.parts[0].notes[0].pitch, 72);
        assert_eq!(score.parts[1].name, PartName::Alto);
    }

    #[test]
    fn track_names_override_order() {
        let tracks: Vec<MidiTrack> = ["Bass", "Instrument 2", "Soprano"]
            .iter()
            .map(|name| MidiTrack {
                name: Some(name.to_string()),
                notes: vec![MidiNote {
                    on_tick: 0,
                    off_tick: 10,
                    pitch: 60,
                    velocity: 64,
                    channel: 0,
                    lyric: None,
                }],
                markers: vec![],
            })
            .collect();
        let seq = MidiSequence {
            ticks_per_quarter: 480,
            tempo_bpm: None,
            tracks,
        };
        let score = sequence_to_score(&seq, &PartMapping::default()).unwrap();
        let names: Vec<_> = score.parts.iter().map(|p| p.name.clone()).collect();
        assert_eq!(names, vec![PartName::Bass, PartName::Alto, PartName::Soprano]);
    }

    #[test]
    fn lyrics_and_markers_survive_encoding() {
        let seq = MidiSequence {
            ticks_per_quarter: 480,
            tempo_bpm: Some(90.0),
            tracks: vec![MidiTrack {
                name: Some("soprano".into()),
                notes: vec![
                    MidiNote {
                        on_tick: 0,
                        off_tick: 494,
                        pitch: 67,
                        velocity: 90,
                        channel: 0,
                        lyric: Some("a".into()),
                    },
                    MidiNote {
                        on_tick: 480,
                        off_tick: 960,
                        pitch: 67,
                        velocity: 91,
                        channel: 0,
                        lyric: Some("o".into()),
                    },
                ],
                markers: vec![(960, "breath".into())],
            }],
        };
        let decoded = read_sequence(&encode_sequence(&seq)).unwrap();
        assert_eq!(decoded.tracks.len(), 2);
        assert!(decoded.tracks[0].notes.is_empty());
        assert_eq!(decoded.tracks[1], seq.tracks[0]);
        assert_eq!(decoded.tempo_bpm, Some(90.0));
    }
}
