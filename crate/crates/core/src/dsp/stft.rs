//! Short-time Fourier transform and its overlap-add inverse.
//!
//! Frames start at multiples of `hop` with no centre padding, so a signal of
//! `d` samples has `1 + (d - n_fft) / hop` frames and an untrimmed inverse of
//! `frames` columns has `(frames - 1) * hop + n_fft` samples.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::Fft;
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::spectrogram::ComplexSpectrogram;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StftConfig {
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 512,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_fft < 2 || !self.n_fft.is_power_of_two() {
            return Err(Error::InvalidConfig(format!(
                "n_fft {} must be a power of two",
                self.n_fft
            )));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::InvalidConfig(format!(
                "hop {} must satisfy 0 < hop <= n_fft",
                self.hop
            )));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.n_fft {
            0
        } else {
            1 + (len - self.n_fft) / self.hop
        }
    }

    pub fn output_len(&self, frames: usize) -> usize {
        (frames.max(1) - 1) * self.hop + self.n_fft
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Complex frames as `frames x bins`, computed in `f64`.
pub(crate) fn stft_frames(signal: &[f32], cfg: &StftConfig) -> Result<Vec<Vec<Complex64>>> {
    cfg.validate()?;
    if signal.len() < cfg.n_fft {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            min: cfg.n_fft,
        });
    }
    let fft = Fft::new(cfg.n_fft)?;
    let window = hann_window(cfg.n_fft);
    let frames = cfg.frame_count(signal.len());
    let mut buf = vec![0.0f64; cfg.n_fft];
    Ok((0..frames)
        .map(|m| {
            let start = m * cfg.hop;
            for (i, b) in buf.iter_mut().enumerate() {
                *b = signal[start + i] as f64 * window[i];
            }
            fft.rfft(&buf)
        })
        .collect())
}

pub fn stft(signal: &AudioBuffer, cfg: &StftConfig) -> Result<ComplexSpectrogram> {
    let frames = stft_frames(&signal.samples, cfg)?;
    let (bins, count) = (cfg.bins(), frames.len());
    let mut real = vec![0.0f32; bins * count];
    let mut imag = vec![0.0f32; bins * count];
    for (m, frame) in frames.iter().enumerate() {
        for (k, c) in frame.iter().enumerate() {
            real[k * count + m] = c.re as f32;
            imag[k * count + m] = c.im as f32;
        }
    }
    ComplexSpectrogram::new(
        Tensor::new(vec![bins, count], real)?,
        Tensor::new(vec![bins, count], imag)?,
        signal.sample_rate,
        cfg.n_fft,
        cfg.hop,
    )
}

/// Inverse transform: per-frame inverse real FFT, Hann synthesis window,
/// overlap-add, then division by the summed squared window wherever that
/// sum is non-negligible.
pub fn istft(spec: &ComplexSpectrogram, cfg: &StftConfig) -> Result<AudioBuffer> {
    cfg.validate()?;
    if spec.bins() != cfg.bins() {
        return Err(Error::DimensionMismatch(format!(
            "{} bins inconsistent with n_fft {}",
            spec.bins(),
            cfg.n_fft
        )));
    }
    let mut out = vec![0.0f32; cfg.output_len(spec.frames())];
    istft_into(spec.real.data(), spec.imag.data(), spec.frames(), cfg, &mut out)?;
    Ok(AudioBuffer::new(out, spec.sample_rate))
}

/// Same as [`istft`] on raw planes (`bins x frames`, row-major), writing
/// into `out`, which must hold `(frames - 1) * hop + n_fft` samples.
pub fn istft_into(
    real: &[f32],
    imag: &[f32],
    frames: usize,
    cfg: &StftConfig,
    out: &mut [f32],
) -> Result<()> {
    let bins = cfg.bins();
    if frames == 0 || real.len() != bins * frames || imag.len() != real.len() {
        return Err(Error::DimensionMismatch(format!(
            "planes of {} values for {bins} bins x {frames} frames",
            real.len()
        )));
    }
    let len = cfg.output_len(frames);
    if out.len() != len {
        return Err(Error::DimensionMismatch(format!(
            "output buffer holds {}, need {len}",
            out.len()
        )));
    }
    let fft = Fft::new(cfg.n_fft)?;
    let window = hann_window(cfg.n_fft);
    let mut acc = vec![0.0f64; len];
    let mut norm = vec![0.0f64; len];
    let mut half = vec![Complex64::new(0.0, 0.0); bins];
    for m in 0..frames {
        for (k, h) in half.iter_mut().enumerate() {
            *h = Complex64::new(real[k * frames + m] as f64, imag[k * frames + m] as f64);
        }
        let frame = fft.irfft(&half);
        let start = m * cfg.hop;
        for i in 0..cfg.n_fft {
            acc[start + i] += frame[i] * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }
    for ((o, a), n) in out.iter_mut().zip(&acc).zip(&norm) {
        *o = if *n > 1e-11 { (a / n) as f32 } else { *a as f32 };
    }
    Ok(())
}
