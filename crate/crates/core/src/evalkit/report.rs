use std::collections::BTreeMap;
use std::fmt;

use log::warn;
use rayon::prelude::*;
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::{EvalError, Metric};
use crate::score_io::PartName;

/// A dB value. Serializes finite values as numbers and infinities as `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Db(pub f64);

impl Serialize for Db {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let v = self.0;
        if v.is_finite() {
            serializer.serialize_f64(v)
        } else if v.is_nan() {
            serializer.serialize_str("nan")
        } else if v > 0.0 {
            serializer.serialize_str("inf")
        } else {
            serializer.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Db {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DbVisitor;
        impl Visitor<'_> for DbVisitor {
            type Value = Db;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or one of \"inf\", \"-inf\", \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Db, E> {
                Ok(Db(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Db, E> {
                Ok(Db(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Db, E> {
                Ok(Db(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Db, E> {
                match v {
                    "inf" => Ok(Db(f64::INFINITY)),
                    "-inf" => Ok(Db(f64::NEG_INFINITY)),
                    "nan" => Ok(Db(f64::NAN)),
                    _ => Err(E::invalid_value(de::Unexpected::Str(v), &self)),
                }
            }
        }
        deserializer.deserialize_any(DbVisitor)
    }
}

impl fmt::Display for Db {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_finite() {
            write!(f, "{:.2}", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Linear-interpolation quantile of an ascending slice at position `p·(n − 1)`.
/// For p = 0.5 and an even count this is the midpoint of the two middle values.
pub fn quantile(sorted: &[f64], p: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        return Some(sorted[lo]);
    }
    let (a, b) = (sorted[lo], sorted[lo + 1]);
    if a == b {
        return Some(a);
    }
    Some((1.0 - frac) * a + frac * b)
}

pub fn median(values: &[f64]) -> Option<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// One evaluated track for one part.
#[derive(Debug, Clone, Copy)]
pub struct TrackAudio<'a> {
    pub id: &'a str,
    pub reference: &'a [f32],
    pub estimate: &'a [f32],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub id: String,
    /// Per 2 s segment; `null` marks a silent reference, skipped in every median.
    pub segments: Vec<Option<Db>>,
    pub median: Option<Db>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartReport {
    pub part: PartName,
    pub tracks: Vec<TrackReport>,
    /// Tracks shorter than one segment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded: Vec<String>,
    /// Median over track medians.
    pub median: Option<Db>,
    pub p25: Option<Db>,
    pub p75: Option<Db>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdrReport {
    pub metric: Metric,
    pub sample_rate: u32,
    pub segment_s: f64,
    pub parts: Vec<PartReport>,
    /// Mean of the per-part medians.
    pub average: Option<Db>,
}

fn segment_scores(track: &TrackAudio, seg: usize, metric: Metric) -> Result<Vec<Option<Db>>, EvalError> {
    if track.reference.len() != track.estimate.len() {
        return Err(EvalError::LengthMismatch {
            expected: track.reference.len(),
            got: track.estimate.len(),
        });
    }
    let count = track.reference.len() / seg;
    (0..count)
        .map(|k| {
            let r = &track.reference[k * seg..(k + 1) * seg];
            let e = &track.estimate[k * seg..(k + 1) * seg];
            match metric.compute(r, e) {
                Ok(v) => Ok(Some(Db(v))),
                Err(EvalError::SilentReference) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect()
}

fn track_median(segments: &[Option<Db>]) -> Option<Db> {
    let values: Vec<f64> = segments.iter().flatten().map(|d| d.0).collect();
    median(&values).map(Db)
}

/// Segment-level scores over non-overlapping windows of `segment_s`
/// (trailing partial window dropped), median per track, then median over
/// tracks per part, plus 25th/75th percentiles and the mean over parts.
pub fn median_sdr(
    parts: &BTreeMap<PartName, Vec<TrackAudio>>,
    sample_rate: u32,
    segment_s: f64,
    metric: Metric,
) -> Result<SdrReport, EvalError> {
    let seg = (segment_s * sample_rate as f64).round() as usize;
    if seg == 0 {
        return Err(EvalError::Config("segment length must be at least one sample".into()));
    }
    let mut reports = Vec::with_capacity(parts.len());
    for (part, tracks) in parts {
        let mut excluded = vec![];
        let eligible: Vec<&TrackAudio> = tracks
            .iter()
            .filter(|t| {
                let ok = t.reference.len() >= seg;
                if !ok {
                    warn!("{part}/{}: shorter than one {segment_s} s segment, excluded", t.id);
                    excluded.push(t.id.to_string());
                }
                ok
            })
            .collect();
        let scored: Vec<TrackReport> = eligible
            .par_iter()
            .map(|t| {
                let segments = segment_scores(t, seg, metric)?;
                Ok(TrackReport {
                    id: t.id.to_string(),
                    median: track_median(&segments),
                    segments,
                })
            })
            .collect::<Result<_, EvalError>>()?;
        let mut medians: Vec<f64> = scored.iter().filter_map(|t| t.median.map(|d| d.0)).collect();
        medians.sort_by(f64::total_cmp);
        reports.push(PartReport {
            part: part.clone(),
            tracks: scored,
            excluded,
            median: quantile(&medians, 0.5).map(Db),
            p25: quantile(&medians, 0.25).map(Db),
            p75: quantile(&medians, 0.75).map(Db),
        });
    }
    let medians: Vec<f64> = reports.iter().filter_map(|r| r.median.map(|d| d.0)).collect();
    let average = (!medians.is_empty()).then(|| Db(medians.iter().sum::<f64>() / medians.len() as f64));
    Ok(SdrReport {
        metric,
        sample_rate,
        segment_s,
        parts: reports,
        average,
    })
}

impl SdrReport {
    pub fn part(&self, part: &PartName) -> Option<&PartReport> {
        self.parts.iter().find(|p| &p.part == part)
    }

    /// Text table: one column per part plus `Avg`, rows for median and quartiles.
    pub fn table(&self) -> String {
        let cell = |d: Option<Db>| d.map_or_else(|| "-".to_string(), |d| d.to_string());
        let mut header = vec![self.metric.as_str().to_uppercase()];
        header.extend(self.parts.iter().map(|p| p.part.title()));
        header.push("Avg".into());
        let mut rows = vec![header];
        for (label, pick) in [
            ("median", (|p: &PartReport| p.median) as fn(&PartReport) -> Option<Db>),
            ("p25", |p| p.p25),
            ("p75", |p| p.p75),
        ] {
            let mut row = vec![label.to_string()];
            row.extend(self.parts.iter().map(|p| cell(pick(p))));
            row.push(if label == "median" { cell(self.average) } else { "-".into() });
            rows.push(row);
        }
        let widths: Vec<usize> = (0..rows[0].len())
            .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in rows {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, s)| format!("{s:>w$}", w = widths[c]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_conventions() {
        assert_eq!(median(&[1.0, 3.0, 100.0]), Some(3.0));
        assert_eq!(median(&[8.0, 4.0]), Some(6.0));
        assert_eq!(median(&[]), None);
        assert_eq!(quantile(&[0.0, 10.0, 20.0, 30.0, 40.0], 0.25), Some(10.0));
        assert_eq!(quantile(&[0.0, 10.0], 0.25), Some(2.5));
        assert_eq!(median(&[1.0, f64::INFINITY, 2.0]), Some(2.0));
        assert_eq!(median(&[1.0, f64::INFINITY]), Some(f64::INFINITY));
        assert_eq!(median(&[f64::NEG_INFINITY, 5.0]), Some(f64::NEG_INFINITY));
    }

    #[test]
    fn db_serialization() {
        let v = vec![Some(Db(1.5)), Some(Db(f64::INFINITY)), Some(Db(f64::NEG_INFINITY)), None];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[1.5,"inf","-inf",null]"#);
        let back: Vec<Option<Db>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    fn tone(len: usize, amp: f32) -> Vec<f32> {
        (0..len).map(|i| amp * ((i as f32) * 0.1).sin()).collect()
    }

    #[test]
    fn segments_tracks_and_dataset() {
        let sr = 100;
        // 3.5 segments: the trailing half segment is dropped.
        let r1 = tone(350, 0.5);
        let mut e1 = r1.clone();
        for v in &mut e1[100..200] {
            *v *= 2.0;
        }
        // Second track: first segment silent.
        let mut r2 = tone(200, 0.5);
        r2[..100].fill(0.0);
        let e2 = vec![0.0; 200];
        let short = tone(50, 0.5);
        let parts = BTreeMap::from([(
            PartName::Soprano,
            vec![
                TrackAudio { id: "a", reference: &r1, estimate: &e1 },
                TrackAudio { id: "b", reference: &r2, estimate: &e2 },
                TrackAudio { id: "c", reference: &short, estimate: &short },
            ],
        )]);
        let report = median_sdr(&parts, sr, 1.0, Metric::Sdr).unwrap();
        let p = &report.parts[0];
        assert_eq!(p.excluded, vec!["c".to_string()]);
        assert_eq!(p.tracks[0].segments.len(), 3);
        assert_eq!(p.tracks[0].segments[0], Some(Db(f64::INFINITY)));
        assert!(p.tracks[0].segments[1].unwrap().0.abs() < 1e-9);
        assert_eq!(p.tracks[0].median, Some(Db(f64::INFINITY)));
        assert_eq!(p.tracks[1].segments[0], None);
        assert!(p.tracks[1].median.unwrap().0.abs() < 1e-9);
        assert_eq!(p.median, Some(Db(f64::INFINITY)));
        assert!(report.table().contains("Soprano"));
    }

    #[test]
    fn dataset_median_of_two_tracks_is_midpoint() {
        // Track SDRs 4 and 8 dB: estimate = ref + scaled noise with known energy ratio.
        let r = tone(100, 0.5);
        let noisy = |snr_db: f64| -> Vec<f32> {
            let g = 10f64.powf(-snr_db / 20.0) as f32;
            r.iter().map(|v| v + g * v).collect()
        };
        let (e4, e8) = (noisy(4.0), noisy(8.0));
        let parts = BTreeMap::from([(
            PartName::Alto,
            vec![
                TrackAudio { id: "x", reference: &r, estimate: &e4 },
                TrackAudio { id: "y", reference: &r, estimate: &e8 },
            ],
        )]);
        let report = median_sdr(&parts, 100, 1.0, Metric::Sdr).unwrap();
        assert!((report.parts[0].median.unwrap().0 - 6.0).abs() < 1e-5);
        assert!((report.average.unwrap().0 - 6.0).abs() < 1e-5);
    }
}
