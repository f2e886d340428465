use serde::{Deserialize, Serialize};

use super::{istft, stft, EvalError, StftConfig};

pub const IRM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    /// Binary mask on the loudest part per bin; ties go to the lowest part index.
    Ibm,
    /// Ratio mask |S_i| / (Σ|S_j| + ε).
    Irm,
    /// The mixture itself as every part's estimate (baseline).
    Mixture,
}

impl OracleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleKind::Ibm => "ibm",
            OracleKind::Irm => "irm",
            OracleKind::Mixture => "mixture",
        }
    }
}

impl std::str::FromStr for OracleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ibm" => Ok(OracleKind::Ibm),
            "irm" => Ok(OracleKind::Irm),
            "mixture" => Ok(OracleKind::Mixture),
            other => Err(format!("unknown oracle '{other}' (expected ibm, irm or mixture)")),
        }
    }
}

/// Per-part masks, one value per (frame, bin) in spectrogram order.
pub fn oracle_masks(magnitudes: &[Vec<f64>], kind: OracleKind) -> Vec<Vec<f64>> {
    let parts = magnitudes.len();
    let cells = magnitudes.first().map_or(0, Vec::len);
    let mut masks = vec![vec![0.0; cells]; parts];
    for c in 0..cells {
        match kind {
            OracleKind::Ibm => {
                let mut best = 0;
                for p in 1..parts {
                    if magnitudes[p][c] > magnitudes[best][c] {
                        best = p;
                    }
                }
                masks[best][c] = 1.0;
            }
            OracleKind::Irm => {
                let total: f64 = magnitudes.iter().map(|m| m[c]).sum::<f64>() + IRM_EPS;
                for p in 0..parts {
                    masks[p][c] = magnitudes[p][c] / total;
                }
            }
            OracleKind::Mixture => {
                for mask in masks.iter_mut() {
                    mask[c] = 1.0;
                }
            }
        }
    }
    masks
}

/// Separate `mixture` with masks computed from the true `stems`.
///
/// Signals are zero-padded by one window on each side before analysis so
/// every original sample is covered by full overlap-add.
pub fn oracle_separate(
    mixture: &[f32],
    stems: &[&[f32]],
    kind: OracleKind,
    cfg: &StftConfig,
) -> Result<Vec<Vec<f32>>, EvalError> {
    cfg.validate()?;
    for s in stems {
        if s.len() != mixture.len() {
            return Err(EvalError::LengthMismatch {
                expected: mixture.len(),
                got: s.len(),
            });
        }
    }
    if mixture.is_empty() {
        return Err(EvalError::EmptyAudio);
    }
    if kind == OracleKind::Mixture {
        return Ok(vec![mixture.to_vec(); stems.len()]);
    }
    let w = cfg.window_size;
    let pad = |x: &[f32]| {
        let mut v = vec![0.0f32; x.len() + 2 * w];
        v[w..w + x.len()].copy_from_slice(x);
        v
    };
    let mix_spec = stft(&pad(mixture), cfg)?;
    let mags: Vec<Vec<f64>> = stems
        .iter()
        .map(|s| stft(&pad(s), cfg).map(|spec| spec.magnitudes()))
        .collect::<Result<_, _>>()?;
    oracle_masks(&mags, kind)
        .into_iter()
        .map(|mask| {
            let mut spec = mix_spec.clone();
            for (bin, m) in spec.data_mut().iter_mut().zip(&mask) {
                *bin *= *m;
            }
            Ok(istft(&spec)[w..w + mixture.len()].to_vec())
        })
        .collect()
}
