use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub window_size: usize,
    pub fft_size: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_size: 2048,
            fft_size: 2048,
            hop: 441,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.window_size == 0 || self.hop == 0 {
            return Err(EvalError::Config("window_size and hop must be positive".into()));
        }
        if self.hop > self.window_size {
            return Err(EvalError::Config(format!(
                "hop {} exceeds window_size {}",
                self.hop, self.window_size
            )));
        }
        if self.fft_size < self.window_size {
            return Err(EvalError::Config(format!(
                "fft_size {} is smaller than window_size {}",
                self.fft_size, self.window_size
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// ⌊(len − W)/H⌋ + 1, or 0 when the signal is shorter than one window.
    pub fn frames_for(&self, len: usize) -> usize {
        if len < self.window_size {
            0
        } else {
            (len - self.window_size) / self.hop + 1
        }
    }

    /// Samples `[W, (frames − 1)·H)`: everything outside the first and last window.
    pub fn interior(&self, len: usize) -> std::ops::Range<usize> {
        let frames = self.frames_for(len);
        let end = frames.saturating_sub(1) * self.hop;
        self.window_size..end.max(self.window_size)
    }

    /// Periodic Hann window.
    pub fn window(&self) -> Vec<f64> {
        let n = self.window_size as f64;
        (0..self.window_size)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos())
            .collect()
    }
}

/// Non-negative-frequency STFT, frames × bins in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    data: Vec<Complex<f64>>,
    frames: usize,
    config: StftConfig,
    len: usize,
}

impl Spectrogram {
    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.config.bins()
    }

    pub fn config(&self) -> StftConfig {
        self.config
    }

    /// Length in samples of the analysed signal.
    pub fn signal_len(&self) -> usize {
        self.len
    }

    pub fn frame(&self, index: usize) -> &[Complex<f64>] {
        let b = self.bins();
        &self.data[index * b..(index + 1) * b]
    }

    pub fn data(&self) -> &[Complex<f64>] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex<f64>] {
        &mut self.data
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|c| c.norm()).collect()
    }
}

pub fn stft(audio: &[f32], cfg: &StftConfig) -> Result<Spectrogram, EvalError> {
    cfg.validate()?;
    if audio.is_empty() {
        return Err(EvalError::EmptyAudio);
    }
    if audio.len() < cfg.window_size {
        return Err(EvalError::TooShort {
            len: audio.len(),
            window: cfg.window_size,
        });
    }
    let frames = cfg.frames_for(audio.len());
    let bins = cfg.bins();
    let window = cfg.window();
    let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
    let mut data = Vec::with_capacity(frames * bins);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    for f in 0..frames {
        let start = f * cfg.hop;
        buf.fill(Complex::new(0.0, 0.0));
        for (i, w) in window.iter().enumerate() {
            buf[i] = Complex::new(audio[start + i] as f64 * w, 0.0);
        }
        fft.process(&mut buf);
        data.extend_from_slice(&buf[..bins]);
    }
    Ok(Spectrogram {
        data,
        frames,
        config: *cfg,
        len: audio.len(),
    })
}

/// Weighted overlap-add inverse, normalized by the summed squared window.
/// Samples no window reaches come back as zero.
pub fn istft(spec: &Spectrogram) -> Vec<f32> {
    let cfg = spec.config;
    let n = cfg.fft_size;
    let bins = cfg.bins();
    let window = cfg.window();
    let ifft = FftPlanner::new().plan_fft_inverse(n);
    let mut acc = vec![0.0f64; spec.len];
    let mut wss = vec![0.0f64; spec.len];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for f in 0..spec.frames {
        let frame = spec.frame(f);
        buf[..bins].copy_from_slice(frame);
        for k in bins..n {
            buf[k] = frame[n - k].conj();
        }
        ifft.process(&mut buf);
        let start = f * cfg.hop;
        for (i, w) in window.iter().enumerate() {
            acc[start + i] += buf[i].re / n as f64 * w;
            wss[start + i] += w * w;
        }
    }
    acc.iter()
        .zip(&wss)
        .map(|(&a, &w)| if w > 1e-10 { (a / w) as f32 } else { 0.0 })
        .collect()
}
