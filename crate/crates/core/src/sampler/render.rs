use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use log::warn;

use super::{BankSet, RenderConfig, RenderError, SampleBank, SampleZone};
use crate::expression::{ExpressiveNote, Performance};
use crate::score_io::PartName;

fn sample_index(seconds: f64, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64).round().max(0.0) as usize
}

/// `ceil(seconds * rate)`, tolerant of float noise just above an integer.
pub(crate) fn buffer_len(seconds: f64, sample_rate: u32) -> usize {
    (seconds * sample_rate as f64 - 1e-6).ceil().max(0.0) as usize
}

/// Zone sample at fractional position `pos`, looping inside `loop_points` once past the loop end.
fn fetch(zone: &SampleZone, pos: f64) -> f32 {
    let audio = &zone.audio;
    let pos = match zone.loop_points {
        Some((start, end)) if pos >= end as f64 => {
            let span = (end - start) as f64;
            start as f64 + (pos - start as f64).rem_euclid(span)
        }
        _ => pos,
    };
    let i = pos.floor() as usize;
    if i >= audio.len() {
        return 0.0;
    }
    let frac = (pos - i as f64) as f32;
    let a = audio[i];
    let b = match zone.loop_points {
        Some((start, end)) if i + 1 == end => audio[start],
        _ => audio.get(i + 1).copied().unwrap_or(0.0),
    };
    a + (b - a) * frac
}

fn check_note(part: &PartName, note: &ExpressiveNote, bank: &SampleBank) -> Result<(), RenderError> {
    if !bank.pitch_range().contains(note.pitch) {
        return Err(RenderError::PitchOutOfRange {
            part: part.to_string(),
            bank: bank.name().to_string(),
            pitch: note.pitch,
            range: bank.pitch_range(),
        });
    }
    if !bank.has_key_for(&note.syllable) {
        return Err(RenderError::UnknownSyllable {
            part: part.to_string(),
            bank: bank.name().to_string(),
            syllable: note.syllable.clone(),
        });
    }
    Ok(())
}

/// Render one part's notes to mono audio of length `ceil(last end_s * sample_rate)`.
///
/// A note marked `legato_from_prev` that overlaps its predecessor replaces
/// the usual release/attack ramps with an equal-power crossfade over the
/// overlap. No normalization is applied.
pub fn render_part(
    part: &PartName,
    notes: &[ExpressiveNote],
    bank: &SampleBank,
    cfg: &RenderConfig,
) -> Result<Vec<f32>, RenderError> {
    cfg.validate()?;
    for note in notes {
        check_note(part, note, bank)?;
    }
    let sr = cfg.sample_rate;
    let last_end = notes.iter().map(|n| n.end_s).fold(0.0, f64::max);
    let mut out = vec![0.0f32; buffer_len(last_end, sr)];
    let attack = (cfg.attack_ms * 1e-3 * sr as f64).round() as usize;
    let release = (cfg.release_ms * 1e-3 * sr as f64).round() as usize;

    let spans: Vec<(usize, usize)> = notes
        .iter()
        .map(|n| {
            let start = sample_index(n.start_s, sr);
            (start, sample_index(n.end_s, sr).clamp(start, out.len()))
        })
        .collect();
    // Crossfade window into note i from note i-1, if any.
    let fade_in: Vec<Option<(usize, usize)>> = (0..notes.len())
        .map(|i| {
            if !cfg.legato_crossfade || i == 0 || !notes[i].legato_from_prev {
                return None;
            }
            let (start, _) = spans[i];
            let prev_end = spans[i - 1].1.min(spans[i].1);
            (prev_end > start).then_some((start, prev_end))
        })
        .collect();

    for (i, note) in notes.iter().enumerate() {
        let zone = bank
            .zone_for(note.pitch, &note.syllable)
            .expect("coverage checked above");
        let (start, end) = spans[i];
        let len = end - start;
        if len == 0 {
            continue;
        }
        let ratio = 2f64.powf((note.pitch as f64 - zone.root_pitch as f64) / 12.0);
        let step = ratio * zone.sample_rate / sr as f64;
        let gain = bank.velocity_gain_curve().gain(note.velocity);
        let fade_out = fade_in.get(i + 1).copied().flatten();
        let att = if fade_in[i].is_some() { 0 } else { attack.min(len) };
        let rel = if fade_out.is_some() { 0 } else { release.min(len) };

        for k in 0..len {
            let t = start + k;
            let mut env = 1.0f64;
            if k < att {
                env *= k as f64 / att as f64;
            }
            if k >= len - rel {
                env *= (len - k) as f64 / rel as f64;
            }
            if let Some((a, b)) = fade_in[i] {
                if t < b {
                    env *= (FRAC_PI_2 * ((t - a) as f64 + 0.5) / (b - a) as f64).sin();
                }
            }
            if let Some((a, b)) = fade_out {
                if t >= b {
                    break;
                }
                if t >= a {
                    env *= (FRAC_PI_2 * ((t - a) as f64 + 0.5) / (b - a) as f64).cos();
                }
            }
            out[t] += (env as f32) * gain * fetch(zone, k as f64 * step);
        }
    }
    Ok(out)
}

/// Render every part with its bank; stems are zero-padded to a common length.
pub fn render_score(
    performance: &Performance,
    banks: &BankSet,
    cfg: &RenderConfig,
) -> Result<BTreeMap<PartName, Vec<f32>>, RenderError> {
    let mut stems = BTreeMap::new();
    for part in &performance.parts {
        let bank = banks
            .get(&part.name)
            .ok_or_else(|| RenderError::NoBank(part.name.to_string()))?;
        let audio = render_part(&part.name, &part.notes, bank, cfg)?;
        let peak = crate::audio::peak(&audio);
        if peak > cfg.peak_target {
            warn!("part '{}' peaks at {peak:.3}, above {}", part.name, cfg.peak_target);
        }
        stems.insert(part.name.clone(), audio);
    }
    let len = stems.values().map(Vec::len).max().unwrap_or(0);
    for audio in stems.values_mut() {
        audio.resize(len, 0.0);
    }
    Ok(stems)
}
