//! Frames to speech: window buffer, extractor, suppression, spectrogram
//! generation, inverse STFT and concatenation.
//!
//! [`StreamingPipeline`] takes one frame at a time; [`run_batch`] takes a
//! whole stream at once and slices windows out of it directly. Both return
//! the same [`PipelineRun`] for the same input.

mod bench;
mod report;

pub use bench::{benchmark_throughput, BenchReport, REFERENCE_FPS};
pub use report::{detection_records, write_detections_json, DetectionRecord};

use std::time::Instant;

use serde::Serialize;

use crate::audio::AudioBuffer;
use crate::config::PipelineConfig;
use crate::dsp::istft_into;
use crate::error::{Error, Result};
use crate::extractor::FeatureExtractor;
use crate::nms::{Detection, NmsState};
use crate::specgen::{GeneratorWeights, Mode};

/// Work counters and wall time of one run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PipelineTiming {
    pub frames: usize,
    /// Window positions visited.
    pub windows: usize,
    /// Extractor calls.
    pub extractions: usize,
    pub wall_secs: f64,
    /// Frames per second of wall time.
    pub fps: f64,
}

/// Result of one run. Equality ignores `timing`.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: PipelineConfig,
    /// In emission order.
    pub detections: Vec<Detection>,
    /// Per-sign audio joined in emission order with `gap_ms` of silence
    /// between consecutive signs.
    pub audio: AudioBuffer,
    pub timing: PipelineTiming,
}

impl PartialEq for PipelineRun {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.detections == other.detections && self.audio == other.audio
    }
}

impl PipelineRun {
    /// Expected audio length for `count` detections under `config`.
    pub fn expected_audio_len(config: &PipelineConfig, count: usize) -> usize {
        count * config.per_sign_samples() + count.saturating_sub(1) * config.gap_samples()
    }
}

/// Turns detections into audio: eval-mode generator, then inverse STFT.
#[derive(Debug, Clone)]
pub struct SpeechRenderer {
    config: PipelineConfig,
    weights: GeneratorWeights<f32>,
}

impl SpeechRenderer {
    pub fn new(config: PipelineConfig, weights: GeneratorWeights<f32>) -> Result<Self> {
        config.validate()?;
        if weights.params != config.generator {
            return Err(Error::DimensionMismatch(
                "generator weights were built for different generator settings".into(),
            ));
        }
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Appends the audio for `detection` to `out`, preceded by the gap when
    /// `out` already holds a sign.
    pub fn render_into(&self, detection: &Detection, out: &mut Vec<f32>) -> Result<()> {
        let spec = self.weights.forward(detection.feature.values(), Mode::Eval)?;
        if !out.is_empty() {
            out.resize(out.len() + self.config.gap_samples(), 0.0);
        }
        let start = out.len();
        out.resize(start + self.config.per_sign_samples(), 0.0);
        istft_into(&spec.real, &spec.imag, spec.frames, &self.config.stft(), &mut out[start..])
    }

    pub fn render(&self, detection: &Detection) -> Result<AudioBuffer> {
        let mut out = Vec::new();
        self.render_into(detection, &mut out)?;
        Ok(AudioBuffer::new(out, self.config.sample_rate))
    }
}

/// Frame-at-a-time pipeline over frames of type `F`.
#[derive(Debug)]
pub struct StreamingPipeline<F, E> {
    renderer: SpeechRenderer,
    extractor: E,
    nms: NmsState<F>,
    detections: Vec<Detection>,
    samples: Vec<f32>,
    frames: usize,
    windows: usize,
    extractions: usize,
    started: Option<Instant>,
}

impl<F, E: FeatureExtractor<F>> StreamingPipeline<F, E> {
    pub fn new(config: PipelineConfig, weights: GeneratorWeights<f32>, extractor: E) -> Result<Self> {
        let nms = NmsState::new(config.nms_params())?;
        Ok(Self {
            renderer: SpeechRenderer::new(config, weights)?,
            extractor,
            nms,
            detections: Vec::new(),
            samples: Vec::new(),
            frames: 0,
            windows: 0,
            extractions: 0,
            started: None,
        })
    }

    pub fn detections(&self) -> &[Detection] {
        &self.detections
    }

    /// Feeds one frame. Returns the detection emitted by it, whose audio
    /// has already been appended.
    pub fn push(&mut self, frame: F) -> Result<Option<&Detection>> {
        self.started.get_or_insert_with(Instant::now);
        self.frames += 1;
        let before = self.nms.extractions();
        let emitted = self.nms.push(frame, &mut self.extractor)?;
        self.extractions += self.nms.extractions() - before;
        self.windows = self.nms.position();
        match emitted {
            Some(d) => {
                self.renderer.render_into(&d, &mut self.samples)?;
                self.detections.push(d);
                Ok(self.detections.last())
            }
            None => Ok(None),
        }
    }

    /// Ends the stream: flushes the pending candidate and returns the run.
    pub fn finish(mut self) -> Result<PipelineRun> {
        if let Some(d) = self.nms.flush() {
            self.renderer.render_into(&d, &mut self.samples)?;
            self.detections.push(d);
        }
        let wall_secs = self.started.map_or(0.0, |s| s.elapsed().as_secs_f64());
        let config = self.renderer.config.clone();
        Ok(PipelineRun {
            audio: AudioBuffer::new(self.samples, config.sample_rate),
            detections: self.detections,
            timing: timing(self.frames, self.windows, self.extractions, wall_secs),
            config,
        })
    }
}

fn timing(frames: usize, windows: usize, extractions: usize, wall_secs: f64) -> PipelineTiming {
    PipelineTiming {
        frames,
        windows,
        extractions,
        wall_secs,
        fps: if wall_secs > 0.0 { frames as f64 / wall_secs } else { 0.0 },
    }
}

/// Streams `frames` through a fresh [`StreamingPipeline`].
pub fn run_stream<F, E: FeatureExtractor<F>>(
    frames: impl IntoIterator<Item = F>,
    extractor: E,
    weights: &GeneratorWeights<f32>,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    let mut p = StreamingPipeline::new(config.clone(), weights.clone(), extractor)?;
    for f in frames {
        p.push(f)?;
    }
    p.finish()
}

/// Same result as [`run_stream`], but windows are borrowed straight from
/// `frames` instead of going through a ring buffer.
pub fn run_batch<F, E: FeatureExtractor<F>>(
    frames: &[F],
    mut extractor: E,
    weights: &GeneratorWeights<f32>,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    let started = Instant::now();
    let renderer = SpeechRenderer::new(config.clone(), weights.clone())?;
    let params = config.nms_params();
    let mut nms: NmsState<F> = NmsState::new(params)?;
    let mut detections = Vec::new();
    let mut samples = Vec::new();
    let positions = (frames.len() + 1).saturating_sub(params.window);
    for _ in 0..positions {
        let t = nms.advance();
        if !params.evaluates(t) {
            continue;
        }
        let (feature, confidence) = extractor.extract(&frames[t - 1..t - 1 + params.window], t)?;
        nms.count_extraction();
        if let Some(d) = nms.observe(t, feature, confidence) {
            renderer.render_into(&d, &mut samples)?;
            detections.push(d);
        }
    }
    let extractions = nms.extractions();
    if let Some(d) = nms.flush() {
        renderer.render_into(&d, &mut samples)?;
        detections.push(d);
    }
    Ok(PipelineRun {
        audio: AudioBuffer::new(samples, config.sample_rate),
        detections,
        timing: timing(frames.len(), positions, extractions, started.elapsed().as_secs_f64()),
        config: config.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::{ConfidenceVector, FeatureVector, MockExtractor, ScriptedExtractor};

    fn toy() -> (PipelineConfig, GeneratorWeights<f32>) {
        let mut cfg = PipelineConfig::toy();
        cfg.window_size = 8;
        cfg.hop_length = 1;
        cfg.overlap = 4;
        let w = GeneratorWeights::init(&cfg.generator, 5).unwrap();
        (cfg, w)
    }

    fn scripted(scores: &[f32], dim: usize) -> ScriptedExtractor {
        ScriptedExtractor::new(
            scores
                .iter()
                .enumerate()
                .map(|(i, &s)| {
                    (
                        FeatureVector::new(vec![i as f32 * 0.01; dim]),
                        ConfidenceVector::new(vec![s, 1.0 - s]).unwrap(),
                    )
                })
                .collect(),
        )
    }

    #[test]
    fn three_separated_peaks() {
        let (cfg, w) = toy();
        let mut scores = vec![0.6f32; 60];
        for p in [5, 25, 45] {
            scores[p] = 0.95;
        }
        let frames = scores.len() + cfg.window_size - 1;
        let run = run_stream(vec![(); frames], scripted(&scores, 32), &w, &cfg).unwrap();
        assert_eq!(run.detections.len(), 3);
        let positions: Vec<usize> = run.detections.iter().map(|d| d.emitted_at).collect();
        assert_eq!(positions, vec![6, 26, 46]);
        assert_eq!(run.audio.len(), 3 * ((10 - 1) * 16 + 64));
        assert_eq!(run.audio.len(), PipelineRun::expected_audio_len(&cfg, 3));
    }

    #[test]
    fn quiet_stream_is_silent() {
        let (cfg, w) = toy();
        let scores = vec![0.55f32; 30];
        let run = run_stream(vec![(); 37], scripted(&scores, 32), &w, &cfg).unwrap();
        assert!(run.detections.is_empty());
        assert!(run.audio.is_empty());
    }

    #[test]
    fn batch_matches_streaming() {
        let (mut cfg, w) = toy();
        cfg.hop_length = 3;
        cfg.gap_ms = 2.0;
        let mock = MockExtractor::new(11, 32, 10);
        let frames = vec![(); 300];
        let a = run_stream(frames.clone(), mock.clone(), &w, &cfg).unwrap();
        let b = run_batch(&frames, mock, &w, &cfg).unwrap();
        assert!(!a.detections.is_empty());
        assert_eq!(a, b);
        assert_eq!(a.timing.extractions, b.timing.extractions);
        assert_eq!(a.audio.len(), PipelineRun::expected_audio_len(&cfg, a.detections.len()));
    }

    #[test]
    fn extractor_miss_aborts() {
        let (cfg, w) = toy();
        let r = run_stream(vec![(); 30], scripted(&[0.9; 3], 32), &w, &cfg);
        assert!(matches!(r, Err(Error::MissingWindow(4))));
    }

    #[test]
    fn mismatched_weights_rejected() {
        let (cfg, _) = toy();
        let other = GeneratorWeights::init(&crate::specgen::GeneratorParams::toy(16, 33, 10), 0).unwrap();
        assert!(SpeechRenderer::new(cfg, other).is_err());
    }
}
