use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::score_io::PartName;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixPolicy {
    pub normalize: bool,
    pub peak_target: f32,
}

impl Default for MixPolicy {
    fn default() -> Self {
        Self {
            normalize: true,
            peak_target: 0.98,
        }
    }
}

impl MixPolicy {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if !(self.peak_target > 0.0 && self.peak_target <= 1.0) {
            return Err(DatasetError::Config(format!(
                "mix peak_target must lie in (0, 1], got {}",
                self.peak_target
            )));
        }
        Ok(())
    }
}

/// Stems after the shared gain, and their sample-wise sum.
#[derive(Debug, Clone, PartialEq)]
pub struct Mix {
    pub stems: BTreeMap<PartName, Vec<f32>>,
    pub mixture: Vec<f32>,
    pub gain: f32,
}

fn sum(stems: &BTreeMap<PartName, Vec<f32>>, len: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; len];
    for audio in stems.values() {
        for (o, &s) in out.iter_mut().zip(audio) {
            *o += s;
        }
    }
    out
}

/// Scale every stem by g = min(1, peak_target / peak(Σ stems)) and sum the
/// scaled stems, so the stored mixture is exactly the sum of the stored stems.
pub fn mix(stems: BTreeMap<PartName, Vec<f32>>, policy: &MixPolicy) -> Result<Mix, DatasetError> {
    policy.validate()?;
    let len = stems.values().next().map_or(0, Vec::len);
    if let Some((part, audio)) = stems.iter().find(|(_, a)| a.len() != len) {
        return Err(DatasetError::LengthMismatch {
            part: part.to_string(),
            expected: len,
            got: audio.len(),
        });
    }
    let peak = crate::audio::peak(&sum(&stems, len));
    let gain = if policy.normalize && peak > policy.peak_target {
        (policy.peak_target as f64 / peak as f64) as f32
    } else {
        1.0
    };
    let mut stems = stems;
    if gain != 1.0 {
        for audio in stems.values_mut() {
            for s in audio.iter_mut() {
                *s *= gain;
            }
        }
    }
    let mixture = sum(&stems, len);
    Ok(Mix {
        stems,
        mixture,
        gain,
    })
}
