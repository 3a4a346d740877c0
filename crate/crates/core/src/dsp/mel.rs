//! HTK-style mel filterbank and mel-frequency cepstra.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::stft::{stft_frames, StftConfig};
use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelConfig {
    pub stft: StftConfig,
    pub n_mels: usize,
    /// Cepstral coefficients kept, starting from index 1.
    pub n_coeffs: usize,
    pub f_min: f64,
    /// Upper edge; `None` means Nyquist.
    pub f_max: Option<f64>,
    /// Floor applied to mel energies before the log.
    pub floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        Self {
            stft: StftConfig {
                n_fft: 1024,
                hop: 256,
            },
            n_mels: 40,
            n_coeffs: 13,
            f_min: 0.0,
            f_max: None,
            floor: 1e-10,
        }
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters, `n_mels x (n_fft/2 + 1)`, unnormalized (peak 1).
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32, f_min: f64, f_max: f64) -> Vec<Vec<f64>> {
    let bins = n_fft / 2 + 1;
    let (lo, hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    (0..n_mels)
        .map(|m| {
            let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
            (0..bins)
                .map(|k| {
                    let f = k as f64 * sample_rate as f64 / n_fft as f64;
                    let up = (f - left) / (centre - left);
                    let down = (right - f) / (right - centre);
                    up.min(down).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II of `x`, first `count` coefficients.
pub fn dct2_ortho(x: &[f64], count: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..count)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * k as f64 * (2.0 * i as f64 + 1.0) / (2.0 * n)).cos())
                    .sum::<f64>()
        })
        .collect()
}

/// Mel cepstra as `frames x n_coeffs`: power spectrum, mel filterbank,
/// natural log of floored energies, orthonormal DCT-II, coefficients
/// `1..=n_coeffs` (the 0th is dropped).
pub fn mel_cepstra(audio: &AudioBuffer, cfg: &MelConfig) -> Result<Tensor> {
    if cfg.n_coeffs == 0 || cfg.n_coeffs >= cfg.n_mels {
        return Err(Error::InvalidConfig(format!(
            "need 0 < n_coeffs < n_mels, got {} and {}",
            cfg.n_coeffs, cfg.n_mels
        )));
    }
    let frames = stft_frames(&audio.samples, &cfg.stft)?;
    let f_max = cfg.f_max.unwrap_or(audio.sample_rate as f64 / 2.0);
    let bank = mel_filterbank(cfg.n_mels, cfg.stft.n_fft, audio.sample_rate, cfg.f_min, f_max);
    let mut out = Vec::with_capacity(frames.len() * cfg.n_coeffs);
    for frame in &frames {
        let power: Vec<f64> = frame.iter().map(|c| c.norm_sqr()).collect();
        let log_mel: Vec<f64> = bank
            .iter()
            .map(|filt| {
                let e: f64 = filt.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(cfg.floor).ln()
            })
            .collect();
        let coeffs = dct2_ortho(&log_mel, cfg.n_coeffs + 1);
        out.extend(coeffs[1..].iter().map(|&c| c as f32));
    }
    Tensor::new(vec![frames.len(), cfg.n_coeffs], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mel_scale_inverts() {
        for hz in [0.0, 100.0, 1000.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn silence_gives_zero_cepstra() {
        let audio = AudioBuffer::silence(4096, 16000);
        let c = mel_cepstra(&audio, &MelConfig::default()).unwrap();
        assert_eq!(c.shape()[1], 13);
        assert!(c.data().iter().all(|v| v.abs() < 1e-4));
    }

    #[test]
    fn identical_audio_identical_cepstra() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let audio = AudioBuffer::new((0..5000).map(|_| rng.gen_range(-0.5..0.5)).collect(), 16000);
        assert_eq!(
            mel_cepstra(&audio, &MelConfig::default()).unwrap(),
            mel_cepstra(&audio.clone(), &MelConfig::default()).unwrap()
        );
    }

    #[test]
    fn hop_delay_shifts_frames() {
        let cfg = MelConfig::default();
        let hop = cfg.stft.hop;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<f32> = (0..8192).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let mut delayed = vec![0.0f32; hop];
        delayed.extend_from_slice(&x[..x.len() - hop]);
        let a = mel_cepstra(&AudioBuffer::new(x, 16000), &cfg).unwrap();
        let b = mel_cepstra(&AudioBuffer::new(delayed, 16000), &cfg).unwrap();
        let n = cfg.n_coeffs;
        let first_diff: f32 = (0..n).map(|i| (a.data()[i] - b.data()[i]).abs()).sum();
        assert!(first_diff > 1e-2);
        let frames = b.shape()[0];
        for m in 1..frames {
            for i in 0..n {
                let (x, y) = (a.data()[(m - 1) * n + i], b.data()[m * n + i]);
                assert!((x - y).abs() < 1e-3, "frame {m} coeff {i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn dct_of_constant_is_dc_only() {
        let c = dct2_ortho(&[3.0; 8], 8);
        assert!((c[0] - 3.0 * 8f64.sqrt()).abs() < 1e-12);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-12));
    }
}
