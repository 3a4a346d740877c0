//! Deterministic synthetic data: class-tone spectrogram targets, noisy
//! prototype features, and scripted sign streams. Used by the examples,
//! the CLI and the tests in place of real video and speech corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::audio::AudioBuffer;
use crate::dsp::{stft, StftConfig};
use crate::error::{Error, Result};
use crate::extractor::{ConfidenceVector, FeatureExtractor, FeatureVector};
use crate::train::{CombinedSample, SpecgenSample};

/// `classes` vectors of `dim` values, each entry `+1` or `-1`.
pub fn class_prototypes(classes: usize, dim: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..classes)
        .map(|_| (0..dim).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect())
        .collect()
}

/// FFT bin carrying the tone of `class`.
pub fn tone_bin(class: usize, stft: &StftConfig) -> usize {
    let usable = stft.bins().saturating_sub(4).max(1);
    2 + (3 * class) % usable
}

/// Audio of the class tone, long enough for exactly `frames` STFT frames.
/// The amplitude puts the spectral peak near 1. A class-dependent phase
/// offset keeps energy in both the real and imaginary planes; without it,
/// tones whose phase advances by a multiple of pi per hop have an almost
/// exactly zero real plane.
pub fn tone_audio(class: usize, stft: &StftConfig, frames: usize, sample_rate: u32) -> AudioBuffer {
    let len = stft.output_len(frames);
    let freq = tone_bin(class, stft) as f64 / stft.n_fft as f64;
    let amp = 4.0 / stft.n_fft as f64;
    let phase = 0.3 + 0.7 * class as f64;
    let samples = (0..len)
        .map(|i| (amp * (2.0 * std::f64::consts::PI * freq * i as f64 + phase).sin()) as f32)
        .collect();
    AudioBuffer::new(samples, sample_rate)
}

/// Real and imaginary planes (`bins x frames`) of the class tone.
pub fn tone_target(class: usize, stft_cfg: &StftConfig, frames: usize, sample_rate: u32) -> Result<(Vec<f32>, Vec<f32>)> {
    let spec = stft(&tone_audio(class, stft_cfg, frames, sample_rate), stft_cfg)?;
    debug_assert_eq!(spec.frames(), frames);
    Ok((spec.real.into_data(), spec.imag.into_data()))
}

fn jitter(rng: &mut ChaCha8Rng, base: &[f32], noise: f32) -> Vec<f32> {
    base.iter().map(|&v| v + rng.gen_range(-noise..=noise)).collect()
}

/// Settings shared by the tone fixtures. Sample `i` belongs to class
/// `i % classes`; its features are the class prototype plus uniform noise
/// of amplitude `noise`, its target the class tone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneFixture {
    pub classes: usize,
    pub feature_dim: usize,
    pub frames: usize,
    pub stft: StftConfig,
    pub sample_rate: u32,
    pub noise: f32,
    pub seed: u64,
}

impl ToneFixture {
    /// Generator examples.
    pub fn specgen(&self, samples: usize) -> Result<Vec<SpecgenSample>> {
        if self.classes == 0 {
            return Err(Error::InvalidInput("need at least one class".into()));
        }
        let protos = class_prototypes(self.classes, self.feature_dim, self.seed);
        let targets = (0..self.classes)
            .map(|c| tone_target(c, &self.stft, self.frames, self.sample_rate))
            .collect::<Result<Vec<_>>>()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5eed);
        Ok((0..samples)
            .map(|i| {
                let c = i % self.classes;
                SpecgenSample {
                    features: jitter(&mut rng, &protos[c], self.noise),
                    real: targets[c].0.clone(),
                    imag: targets[c].1.clone(),
                }
            })
            .collect())
    }

    /// Joint-training examples; `feature_dim` is the classifier input size.
    pub fn combined(&self, samples: usize) -> Result<Vec<CombinedSample>> {
        Ok(self
            .specgen(samples)?
            .into_iter()
            .enumerate()
            .map(|(i, s)| CombinedSample {
                input: s.features,
                label: i % self.classes,
                real: s.real,
                imag: s.imag,
            })
            .collect())
    }
}

/// One scripted sign: a triangular confidence hump around `centre`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignEvent {
    /// 1-based window position of the peak.
    pub centre: usize,
    pub class: usize,
    pub peak: f32,
}

/// Position-indexed extractor replaying scripted signs over a quiet
/// background. Frames are ignored.
///
/// At each position the dominant sign is the one with the highest hump
/// value; its class receives that score and the remaining mass is spread
/// evenly over the other classes. Features are the class prototype scaled
/// by the score. Positions outside every hump score `background` on class 0
/// with zero features.
#[derive(Debug, Clone)]
pub struct ScriptedSigns {
    pub signs: Vec<SignEvent>,
    pub half_width: usize,
    pub background: f32,
    prototypes: Vec<Vec<f32>>,
}

impl ScriptedSigns {
    pub fn new(
        signs: Vec<SignEvent>,
        half_width: usize,
        background: f32,
        classes: usize,
        feature_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        if classes < 2 || half_width == 0 {
            return Err(Error::InvalidInput("need >= 2 classes and half_width >= 1".into()));
        }
        if let Some(s) = signs.iter().find(|s| s.class >= classes || !(0.0..=1.0).contains(&s.peak)) {
            return Err(Error::InvalidInput(format!("bad sign event {s:?}")));
        }
        if !(0.0..=1.0).contains(&background) {
            return Err(Error::InvalidInput(format!("background {background} outside [0, 1]")));
        }
        Ok(Self {
            signs,
            half_width,
            background,
            prototypes: class_prototypes(classes, feature_dim, seed),
        })
    }

    /// Dominant class and score at `position`.
    pub fn score(&self, position: usize) -> (usize, f32) {
        let mut best = (0, self.background);
        for s in &self.signs {
            let d = position.abs_diff(s.centre) as f32;
            let v = s.peak * (1.0 - d / self.half_width as f32);
            if v > best.1 {
                best = (s.class, v);
            }
        }
        best
    }

    pub fn sample(&self, position: usize) -> (FeatureVector, ConfidenceVector) {
        let (class, score) = self.score(position);
        let k = self.prototypes.len();
        let rest = (1.0 - score) / (k - 1) as f32;
        let conf = (0..k).map(|c| if c == class { score } else { rest }).collect();
        let feature = if score > self.background {
            self.prototypes[class].iter().map(|v| v * score).collect()
        } else {
            vec![0.0; self.prototypes[class].len()]
        };
        (
            FeatureVector::new(feature),
            ConfidenceVector::new(conf).expect("scores lie in [0, 1]"),
        )
    }
}

impl<F> FeatureExtractor<F> for ScriptedSigns {
    fn extract(&mut self, _window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        Ok(self.sample(position))
    }
}
