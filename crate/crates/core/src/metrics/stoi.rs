//! Short-time objective intelligibility.
//!
//! Both signals are linearly resampled to 10 kHz, frames more than 40 dB
//! below the loudest reference frame are dropped from both, and the
//! remaining audio is split into 15 one-third-octave band envelopes. Over
//! every run of 30 consecutive frames the test envelope is scaled to the
//! reference energy, clipped to a -15 dB signal-to-distortion bound, and
//! correlated with the reference. The score is the mean correlation.

use crate::audio::AudioBuffer;
use crate::dsp::Fft;
use crate::error::{Error, Result};

pub const STOI_RATE: u32 = 10_000;
const FRAME: usize = 256;
const HOP: usize = FRAME / 2;
const NFFT: usize = 512;
const BANDS: usize = 15;
const MIN_FREQ: f64 = 150.0;
const SEGMENT: usize = 30;
const BETA_DB: f64 = -15.0;
const DYN_RANGE_DB: f64 = 40.0;
const EPS: f64 = 1e-12;

/// Shortest input, in seconds, that can yield one full segment.
pub fn stoi_min_duration() -> f64 {
    ((SEGMENT - 1) * HOP + FRAME) as f64 / STOI_RATE as f64
}

/// Linear-interpolation resampling to `rate`.
pub fn resample_linear(audio: &AudioBuffer, rate: u32) -> AudioBuffer {
    if audio.sample_rate == rate || audio.is_empty() {
        return AudioBuffer::new(audio.samples.clone(), rate);
    }
    let ratio = audio.sample_rate as f64 / rate as f64;
    let len = ((audio.len() as f64) / ratio).floor() as usize;
    let last = audio.len() - 1;
    let samples = (0..len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let j = (pos.floor() as usize).min(last);
            let frac = pos - j as f64;
            let a = audio.samples[j] as f64;
            let b = audio.samples[(j + 1).min(last)] as f64;
            (a + (b - a) * frac) as f32
        })
        .collect();
    AudioBuffer::new(samples, rate)
}

/// Symmetric Hann window without the zero end points.
fn analysis_window() -> Vec<f64> {
    (1..=FRAME)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (FRAME + 1) as f64).cos())
        .collect()
}

fn frame_starts(len: usize) -> impl Iterator<Item = usize> {
    (0..len.saturating_sub(FRAME)).step_by(HOP)
}

/// Drops frames whose reference energy is more than 40 dB below the
/// loudest one, then overlap-adds the kept frames back into signals.
fn remove_silent_frames(x: &[f64], y: &[f64], window: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let starts: Vec<usize> = frame_starts(x.len()).collect();
    let energy: Vec<f64> = starts
        .iter()
        .map(|&s| {
            let e: f64 = (0..FRAME).map(|i| (x[s + i] * window[i]).powi(2)).sum();
            20.0 * (e.sqrt() + EPS).log10()
        })
        .collect();
    let loudest = energy.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept: Vec<usize> = starts
        .iter()
        .zip(&energy)
        .filter(|(_, &e)| e > loudest - DYN_RANGE_DB)
        .map(|(&s, _)| s)
        .collect();
    let len = if kept.is_empty() { 0 } else { (kept.len() - 1) * HOP + FRAME };
    let mut xs = vec![0.0; len];
    let mut ys = vec![0.0; len];
    for (k, &s) in kept.iter().enumerate() {
        let o = k * HOP;
        for i in 0..FRAME {
            xs[o + i] += x[s + i] * window[i];
            ys[o + i] += y[s + i] * window[i];
        }
    }
    (xs, ys)
}

/// Third-octave band bin ranges `[lo, hi)` over the `NFFT/2 + 1` bins.
fn band_ranges() -> Vec<(usize, usize)> {
    let bins = NFFT / 2 + 1;
    let freq = |k: usize| k as f64 * STOI_RATE as f64 / NFFT as f64;
    let nearest = |f: f64| {
        (0..bins)
            .min_by(|&a, &b| (freq(a) - f).abs().total_cmp(&(freq(b) - f).abs()))
            .expect("bins is non-empty")
    };
    (0..BANDS)
        .map(|b| {
            let centre = MIN_FREQ * 2f64.powf(b as f64 / 3.0);
            (nearest(centre * 2f64.powf(-1.0 / 6.0)), nearest(centre * 2f64.powf(1.0 / 6.0)))
        })
        .collect()
}

/// Band envelopes as `bands x frames`.
fn band_envelopes(signal: &[f64], window: &[f64], fft: &Fft, bands: &[(usize, usize)]) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new(); BANDS];
    let mut buf = vec![0.0; NFFT];
    for s in frame_starts(signal.len()) {
        for i in 0..FRAME {
            buf[i] = signal[s + i] * window[i];
        }
        let spec = fft.rfft(&buf);
        for (b, &(lo, hi)) in bands.iter().enumerate() {
            let e: f64 = spec[lo..hi].iter().map(|c| c.norm_sqr()).sum();
            out[b].push(e.sqrt());
        }
    }
    out
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Intelligibility of `test` relative to `reference`, clamped to `[0, 1]`.
pub fn stoi(reference: &AudioBuffer, test: &AudioBuffer) -> Result<f64> {
    if reference.sample_rate != test.sample_rate {
        return Err(Error::DimensionMismatch(format!(
            "sample rates {} and {} differ",
            reference.sample_rate, test.sample_rate
        )));
    }
    if reference.len() != test.len() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} samples, test has {}",
            reference.len(),
            test.len()
        )));
    }
    let x = resample_linear(reference, STOI_RATE);
    let y = resample_linear(test, STOI_RATE);
    let min = (stoi_min_duration() * reference.sample_rate as f64).ceil() as usize;
    let too_short = || Error::SignalTooShort {
        len: reference.len(),
        min,
    };
    let x: Vec<f64> = x.samples.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = y.samples.iter().map(|&v| v as f64).collect();
    let window = analysis_window();
    let (xs, ys) = remove_silent_frames(&x, &y, &window);
    let fft = Fft::new(NFFT)?;
    let bands = band_ranges();
    let xe = band_envelopes(&xs, &window, &fft, &bands);
    let ye = band_envelopes(&ys, &window, &fft, &bands);
    let frames = xe[0].len();
    if frames < SEGMENT {
        return Err(too_short());
    }
    let clip = 10f64.powf(-BETA_DB / 20.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for end in SEGMENT..=frames {
        for b in 0..BANDS {
            let xseg = &xe[b][end - SEGMENT..end];
            let yseg = &ye[b][end - SEGMENT..end];
            let scale = norm(xseg) / (norm(yseg) + EPS);
            let yc: Vec<f64> = yseg
                .iter()
                .zip(xseg)
                .map(|(&yv, &xv)| (yv * scale).min(xv * (1.0 + clip)))
                .collect();
            let xm = xseg.iter().sum::<f64>() / SEGMENT as f64;
            let ym = yc.iter().sum::<f64>() / SEGMENT as f64;
            let xc: Vec<f64> = xseg.iter().map(|v| v - xm).collect();
            let yc: Vec<f64> = yc.iter().map(|v| v - ym).collect();
            let dot: f64 = xc.iter().zip(&yc).map(|(a, b)| a * b).sum();
            total += dot / ((norm(&xc) + EPS) * (norm(&yc) + EPS));
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Amplitude-modulated harmonic tone: a crude speech stand-in.
    fn speechlike(secs: f64, rate: u32) -> AudioBuffer {
        let n = (secs * rate as f64) as usize;
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 / rate as f64;
                let env = 0.5 + 0.5 * (2.0 * std::f64::consts::PI * 4.0 * t).sin();
                let tone: f64 = [220.0, 440.0, 880.0, 1760.0]
                    .iter()
                    .map(|f| (2.0 * std::f64::consts::PI * f * t).sin())
                    .sum();
                (0.2 * env * tone) as f32
            })
            .collect();
        AudioBuffer::new(samples, rate)
    }

    #[test]
    fn identical_signals_score_high() {
        let x = speechlike(1.0, 16000);
        assert!(stoi(&x, &x).unwrap() >= 0.99);
    }

    #[test]
    fn strong_noise_scores_low() {
        let x = speechlike(1.5, 16000);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noisy = AudioBuffer::new(
            x.samples.iter().map(|_| rng.gen_range(-3.0f32..3.0)).collect(),
            16000,
        );
        let s = stoi(&x, &noisy).unwrap();
        assert!((0.0..0.3).contains(&s), "{s}");
    }

    #[test]
    fn short_input_is_an_error() {
        let x = speechlike(0.2, 16000);
        assert!(matches!(stoi(&x, &x), Err(Error::SignalTooShort { .. })));
    }

    #[test]
    fn resample_keeps_endpoints() {
        let a = AudioBuffer::new((0..200).map(|i| i as f32).collect(), 20000);
        let r = resample_linear(&a, 10000);
        assert_eq!(r.len(), 100);
        assert_eq!(r.samples[0], 0.0);
        assert_eq!(r.samples[10], 20.0);
    }
}
