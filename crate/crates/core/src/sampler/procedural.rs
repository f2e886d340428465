//! Asset-free test banks: additive single-cycle tables, one per pitch and syllable.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{SampleBank, SampleZone, VelocityCurve, DEFAULT_ZONE_KEY};
use crate::range_transform::RangePreset;
use crate::score_io::PartName;

const TABLE_LEN: usize = 4096;
const TABLE_PEAK: f64 = 0.5;
const FORMANT_BANDWIDTH_HZ: f64 = 90.0;
const FORMANT_GAINS: (f64, f64) = (0.5, 0.3);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    Sawtooth,
    Square,
    Triangle,
    Sine,
}

impl Waveform {
    pub fn for_part(part: &PartName) -> Waveform {
        match part {
            PartName::Soprano => Waveform::Sawtooth,
            PartName::Alto => Waveform::Square,
            PartName::Tenor => Waveform::Triangle,
            PartName::Bass | PartName::Other(_) => Waveform::Sine,
        }
    }

    /// Signed amplitude of harmonic `n` (1-based) in the Fourier sine series.
    fn harmonic(self, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            Waveform::Sawtooth => 1.0 / nf,
            Waveform::Square if n % 2 == 1 => 1.0 / nf,
            Waveform::Triangle if n % 2 == 1 => {
                let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
                sign / (nf * nf)
            }
            Waveform::Sine if n == 1 => 1.0,
            _ => 0.0,
        }
    }
}

/// First and second formant frequencies (Hz) for the built-in vowels.
pub fn formants(syllable: &str) -> Option<(f64, f64)> {
    match syllable {
        "a" => Some((730.0, 1090.0)),
        "e" => Some((530.0, 1840.0)),
        "i" => Some((390.0, 1990.0)),
        "o" => Some((570.0, 840.0)),
        "u" => Some((440.0, 1020.0)),
        _ => None,
    }
}

fn resonance(f: f64, center: f64) -> f64 {
    let x = (f - center) / FORMANT_BANDWIDTH_HZ;
    1.0 / (1.0 + x * x)
}

/// Gain of the two-resonance vowel filter at `f` Hz. Unknown syllables pass through unfiltered.
fn vowel_gain(syllable: &str, f: f64) -> f64 {
    match formants(syllable) {
        Some((f1, f2)) => 1.0 + FORMANT_GAINS.0 * resonance(f, f1) + FORMANT_GAINS.1 * resonance(f, f2),
        None => 1.0,
    }
}

pub(crate) fn midi_hz(pitch: u8) -> f64 {
    440.0 * 2f64.powf((pitch as f64 - 69.0) / 12.0)
}

/// One period of the band-limited waveform for `pitch`, normalized to a fixed peak.
fn cycle(waveform: Waveform, syllable: &str, pitch: u8, sample_rate: u32) -> Vec<f32> {
    let f0 = midi_hz(pitch);
    let nyquist = sample_rate as f64 / 2.0;
    let partials: Vec<(usize, f64)> = (1..)
        .take_while(|&n| (n as f64) * f0 < nyquist)
        .map(|n| (n, waveform.harmonic(n) * vowel_gain(syllable, n as f64 * f0)))
        .filter(|&(_, a)| a != 0.0)
        .collect();
    let table: Vec<f64> = (0..TABLE_LEN)
        .map(|i| {
            let phase = 2.0 * PI * i as f64 / TABLE_LEN as f64;
            partials.iter().map(|&(n, a)| a * (n as f64 * phase).sin()).sum()
        })
        .collect();
    let peak = table.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 { TABLE_PEAK / peak } else { 0.0 };
    table.into_iter().map(|v| (v * scale) as f32).collect()
}

/// Procedural bank for a voice part: soprano sawtooth, alto square, tenor
/// triangle, bass sine, each partial kept below Nyquist at `sample_rate`.
/// Every syllable gets its own zone set shaped by a fixed vowel filter.
/// Ranges follow the vocal-library defaults; unknown parts get A0–C8.
pub fn test_bank(part: &PartName, syllable_set: &[String], sample_rate: u32) -> SampleBank {
    let range = RangePreset::VoicesOfRapture.range_for(part);
    let waveform = Waveform::for_part(part);
    let keys: Vec<String> = if syllable_set.is_empty() {
        vec![DEFAULT_ZONE_KEY.to_string()]
    } else {
        syllable_set.to_vec()
    };
    let mut zones = BTreeMap::new();
    for key in &keys {
        let list = (range.low()..=range.high())
            .map(|pitch| SampleZone {
                root_pitch: pitch,
                low: pitch,
                high: pitch,
                audio: cycle(waveform, key, pitch, sample_rate).into(),
                sample_rate: TABLE_LEN as f64 * midi_hz(pitch),
                loop_points: Some((0, TABLE_LEN)),
            })
            .collect();
        zones.insert(key.clone(), list);
    }
    SampleBank::new(
        format!("test-{part}"),
        zones,
        range,
        VelocityCurve::Linear,
        syllable_set.to_vec(),
    )
    .expect("procedural bank is complete by construction")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn waveform_series_signs() {
        assert_eq!(Waveform::Square.harmonic(2), 0.0);
        assert_eq!(Waveform::Triangle.harmonic(3), -1.0 / 9.0);
        assert_eq!(Waveform::Triangle.harmonic(5), 1.0 / 25.0);
        assert_eq!(Waveform::Sine.harmonic(2), 0.0);
    }

    #[test]
    fn soprano_top_note_stays_below_nyquist() {
        let f0 = midi_hz(86);
        let highest = (1..).take_while(|&n| n as f64 * f0 < 11025.0).last().unwrap();
        assert_eq!(highest, 9);
        assert!(highest as f64 * f0 < 11025.0);
    }

    #[test]
    fn bank_layout() {
        let syllables: Vec<String> = ["a", "o"].map(String::from).to_vec();
        let bank = test_bank(&PartName::Tenor, &syllables, 22050);
        assert_eq!(bank.zone_sets(), 2);
        assert_eq!((bank.pitch_range().low(), bank.pitch_range().high()), (47, 73));
        let z = bank.zone_for(60, "o").unwrap();
        assert_eq!(z.root_pitch, 60);
        assert!((z.peak() - 0.5).abs() < 1e-6);
        assert!(bank.zone_for(60, "x").is_none());
        // Different vowels give different tables for harmonic-rich waveforms.
        assert_ne!(bank.zone_for(60, "a").unwrap().audio, z.audio);
    }
}
