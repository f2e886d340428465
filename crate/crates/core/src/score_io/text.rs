//! Plain-text score fixtures.
//!
//! ```text
//! # comment
//! tempo 90            # bpm, default 90
//! ppq 480             # ticks per quarter, default 480
//! part bass           # declare a part (optional; fixes part order, allows empty parts)
//! breath soprano 4    # breath break at beat 4
//! soprano 0 1 72 90   # part onset_beats duration_beats pitch velocity
//! ```
//!
//! Beats are converted to ticks by rounding `beats * ppq`.

use super::model::{Note, PartName, Score, VoicePart, DEFAULT_TEMPO_BPM, DEFAULT_TICKS_PER_QUARTER};
use super::ScoreError;

enum Line {
    Note {
        line: usize,
        part: PartName,
        onset: f64,
        duration: f64,
        pitch: u8,
        velocity: u8,
    },
    Breath {
        part: PartName,
        beat: f64,
    },
}

pub fn parse_text_score(text: &str) -> Result<Score, ScoreError> {
    let mut tempo = DEFAULT_TEMPO_BPM;
    let mut ppq = DEFAULT_TICKS_PER_QUARTER;
    let mut order: Vec<PartName> = Vec::new();
    let mut lines = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        let syntax = |reason: String| ScoreError::Syntax { line, reason };
        match fields[0] {
            "tempo" => {
                let [_, value] = fields[..] else {
                    return Err(syntax("expected `tempo <bpm>`".into()));
                };
                tempo = number(value, "tempo", line)?;
                if !(tempo > 0.0) {
                    return Err(syntax(format!("tempo must be positive, got {value}")));
                }
            }
            "ppq" => {
                let [_, value] = fields[..] else {
                    return Err(syntax("expected `ppq <ticks>`".into()));
                };
                ppq = value
                    .parse()
                    .ok()
                    .filter(|&p: &u16| p > 0)
                    .ok_or_else(|| syntax(format!("invalid ppq '{value}'")))?;
            }
            "part" => {
                let [_, name] = fields[..] else {
                    return Err(syntax("expected `part <name>`".into()));
                };
                let part = part_name(name, line)?;
                if !order.contains(&part) {
                    order.push(part);
                }
            }
            "breath" => {
                let [_, name, beat] = fields[..] else {
                    return Err(syntax("expected `breath <part> <beat>`".into()));
                };
                let part = part_name(name, line)?;
                let beat = non_negative(beat, "breath position", line)?;
                if !order.contains(&part) {
                    order.push(part.clone());
                }
                lines.push(Line::Breath { part, beat });
            }
            _ => {
                let [name, onset, duration, pitch, velocity] = fields[..] else {
                    return Err(syntax(format!(
                        "expected `part onset duration pitch velocity`, got {} fields",
                        fields.len()
                    )));
                };
                let part = part_name(name, line)?;
                let onset = non_negative(onset, "onset", line)?;
                let duration = number(duration, "duration", line)?;
                if !(duration > 0.0) {
                    return Err(syntax(format!("duration must be positive, got {duration}")));
                }
                let pitch = bounded(pitch, "pitch", 0, 127, line)?;
                let velocity = bounded(velocity, "velocity", 1, 127, line)?;
                if !order.contains(&part) {
                    order.push(part.clone());
                }
                lines.push(Line::Note {
                    line,
                    part,
                    onset,
                    duration,
                    pitch,
                    velocity,
                });
            }
        }
    }

    let to_ticks = |beats: f64| (beats * ppq as f64).round();
    let mut parts: Vec<VoicePart> = order
        .into_iter()
        .map(|name| VoicePart::new(name, Vec::new()))
        .collect();
    for entry in lines {
        match entry {
            Line::Note {
                line,
                part,
                onset,
                duration,
                pitch,
                velocity,
            } => {
                let start = to_ticks(onset);
                let end = to_ticks(onset + duration);
                if end <= start || end > u32::MAX as f64 {
                    return Err(ScoreError::Syntax {
                        line,
                        reason: format!("note does not span a whole tick at ppq {ppq}"),
                    });
                }
                let target = parts.iter_mut().find(|p| p.name == part).expect("declared");
                target.notes.push(Note::new(
                    start as u32,
                    (end - start) as u32,
                    pitch,
                    velocity,
                ));
            }
            Line::Breath { part, beat } => {
                let target = parts.iter_mut().find(|p| p.name == part).expect("declared");
                target
                    .breath_breaks
                    .get_or_insert_with(Vec::new)
                    .push(to_ticks(beat) as u32);
            }
        }
    }
    for part in &mut parts {
        part.notes.sort_by_key(|n| (n.onset_ticks, n.pitch));
        if let Some(b) = part.breath_breaks.as_mut() {
            b.sort_unstable();
            b.dedup();
        }
    }
    Score::new(parts, ppq, tempo)
}

fn part_name(name: &str, line: usize) -> Result<PartName, ScoreError> {
    name.parse().map_err(|_| ScoreError::Syntax {
        line,
        reason: format!("invalid part name '{name}'"),
    })
}

fn number(value: &str, what: &str, line: usize) -> Result<f64, ScoreError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| ScoreError::Syntax {
            line,
            reason: format!("invalid {what} '{value}'"),
        })
}

fn non_negative(value: &str, what: &str, line: usize) -> Result<f64, ScoreError> {
    let v = number(value, what, line)?;
    if v < 0.0 {
        return Err(ScoreError::Syntax {
            line,
            reason: format!("{what} must be non-negative, got {value}"),
        });
    }
    Ok(v)
}

fn bounded(value: &str, what: &str, lo: i64, hi: i64, line: usize) -> Result<u8, ScoreError> {
    let v: i64 = value.parse().map_err(|_| ScoreError::Syntax {
        line,
        reason: format!("invalid {what} '{value}'"),
    })?;
    if !(lo..=hi).contains(&v) {
        return Err(ScoreError::Syntax {
            line,
            reason: format!("{what} {v} out of range {lo}..={hi}"),
        });
    }
    Ok(v as u8)
}

/// Render a score in the text format. Beats are written with enough precision to round-trip ticks.
pub fn to_text_score(score: &Score) -> String {
    let ppq = score.ticks_per_quarter as f64;
    let beats = |t: u32| {
        let b = t as f64 / ppq;
        let s = format!("{b:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    };
    let mut out = format!("tempo {}\nppq {}\n", score.tempo_bpm, score.ticks_per_quarter);
    for part in &score.parts {
        out.push_str(&format!("part {}\n", part.name));
    }
    for part in &score.parts {
        for &b in part.breath_breaks.iter().flatten() {
            out.push_str(&format!("breath {} {}\n", part.name, beats(b)));
        }
        for n in &part.notes {
            out.push_str(&format!(
                "{} {} {} {} {}\n",
                part.name,
                beats(n.onset_ticks),
                beats(n.duration_ticks),
                n.pitch,
                n.velocity
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beats_convert_to_ticks() {
        let score = parse_text_score("tempo 90\nppq 480\nsoprano 0 1 72 90\n").unwrap();
        assert_eq!(score.tempo_bpm, 90.0);
        assert_eq!(score.parts[0].name, PartName::Soprano);
        assert_eq!(score.parts[0].notes, vec![Note::new(0, 480, 72, 90)]);
    }

    #[test]
    fn overlapping_notes_are_rejected() {
        let text = "soprano 0 2 72 90\nsoprano 1 1 74 90\n";
        assert!(matches!(
            parse_text_score(text),
            Err(ScoreError::Polyphonic { tick: 480, .. })
        ));
    }

    #[test]
    fn pitch_out_of_range_reports_line() {
        let text = "tempo 90\n\nalto 0 1 128 90\n";
        match parse_text_score(text) {
            Err(ScoreError::Syntax { line, reason }) => {
                assert_eq!(line, 3);
                assert!(reason.contains("pitch 128"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        for (text, bad_line) in [
            ("tempo fast\n", 1),
            ("ppq 0\n", 1),
            ("soprano 0 1 60\n", 1),
            ("# c\nsoprano -1 1 60 80\n", 2),
            ("soprano 0 0 60 80\n", 1),
            ("soprano 0 1 60 0\n", 1),
        ] {
            match parse_text_score(text) {
                Err(ScoreError::Syntax { line, .. }) => assert_eq!(line, bad_line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn declared_parts_fix_order_and_may_be_empty() {
        let text = "part soprano\npart bass\nbass 0 1 40 80\nbreath bass 2\nbass 2 1 41 80\n";
        let score = parse_text_score(text).unwrap();
        assert_eq!(score.parts.len(), 2);
        assert!(score.parts[0].notes.is_empty());
        assert_eq!(score.parts[1].breath_breaks, Some(vec![960]));
    }

    #[test]
    fn text_round_trip() {
        let text = "tempo 72.5\nppq 96\nsoprano 0 1.5 72 90\nsoprano 1.5 0.25 74 91\nalto 0 2 65 70\nbreath alto 2\n";
        let score = parse_text_score(text).unwrap();
        let again = parse_text_score(&to_text_score(&score)).unwrap();
        assert_eq!(score, again);
    }
}
