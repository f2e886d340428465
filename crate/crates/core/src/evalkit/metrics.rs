use serde::{Deserialize, Serialize};

use super::EvalError;

/// References with RMS below this (−60 dBFS) are treated as silent.
pub const SILENCE_RMS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum Metric {
    #[default]
    #[serde(rename = "sdr")]
    Sdr,
    #[serde(rename = "si-sdr")]
    SiSdr,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Sdr => "sdr",
            Metric::SiSdr => "si-sdr",
        }
    }

    pub fn compute(self, reference: &[f32], estimate: &[f32]) -> Result<f64, EvalError> {
        match self {
            Metric::Sdr => sdr(reference, estimate),
            Metric::SiSdr => si_sdr(reference, estimate),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sdr" => Ok(Metric::Sdr),
            "si-sdr" | "si_sdr" | "sisdr" => Ok(Metric::SiSdr),
            other => Err(format!("unknown metric '{other}' (expected sdr or si-sdr)")),
        }
    }
}

fn check(reference: &[f32], estimate: &[f32]) -> Result<f64, EvalError> {
    if reference.len() != estimate.len() {
        return Err(EvalError::LengthMismatch {
            expected: reference.len(),
            got: estimate.len(),
        });
    }
    if reference.is_empty() {
        return Err(EvalError::EmptyAudio);
    }
    let energy = dot(reference, reference);
    if (energy / reference.len() as f64).sqrt() < SILENCE_RMS {
        return Err(EvalError::SilentReference);
    }
    Ok(energy)
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x as f64 * y as f64).sum()
}

fn db(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 {
            f64::NAN
        } else {
            f64::INFINITY
        }
    } else {
        10.0 * (num / den).log10()
    }
}

/// Energy SDR: 10·log10(Σ ref² / Σ (ref − est)²). +∞ when the estimate is exact.
pub fn sdr(reference: &[f32], estimate: &[f32]) -> Result<f64, EvalError> {
    let energy = check(reference, estimate)?;
    let err: f64 = reference
        .iter()
        .zip(estimate)
        .map(|(&r, &e)| (r as f64 - e as f64).powi(2))
        .sum();
    Ok(db(energy, err))
}

/// Scale-invariant SDR. Zero or orthogonal estimates give −∞.
pub fn si_sdr(reference: &[f32], estimate: &[f32]) -> Result<f64, EvalError> {
    let energy = check(reference, estimate)?;
    let alpha = dot(estimate, reference) / energy;
    if alpha == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (mut target, mut noise) = (0.0f64, 0.0f64);
    for (&r, &e) in reference.iter().zip(estimate) {
        let t = alpha * r as f64;
        target += t * t;
        noise += (e as f64 - t).powi(2);
    }
    Ok(db(target, noise))
}
