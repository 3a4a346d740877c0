//! Run configuration and the gloss vocabulary.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dsp::StftConfig;
use crate::error::{Error, Result};
use crate::nms::NmsParams;
use crate::specgen::GeneratorParams;

/// Everything a streaming run needs. Missing JSON fields take the defaults
/// below (window 50, hop 3, threshold 0.7).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub window_size: usize,
    pub hop_length: usize,
    pub overlap: usize,
    pub confidence_threshold: f32,
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
    pub feature_dim: usize,
    pub class_count: usize,
    pub generator: GeneratorParams,
    /// Silence inserted between consecutive signs, in milliseconds.
    pub gap_ms: f64,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            window_size: 50,
            hop_length: 3,
            overlap: 25,
            confidence_threshold: 0.7,
            n_fft: 2048,
            hop: 512,
            sample_rate: 22050,
            feature_dim: 2048,
            class_count: 1500,
            generator: GeneratorParams::full_scale(),
            gap_ms: 0.0,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Small generator and FFT sizes; detection parameters stay at their defaults.
    pub fn toy() -> Self {
        Self {
            n_fft: 64,
            hop: 16,
            feature_dim: 32,
            class_count: 10,
            generator: GeneratorParams::toy(32, 33, 10),
            ..Self::default()
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.window_size == 0 {
            return bad("window_size must be positive".into());
        }
        if self.overlap == 0 || self.overlap >= self.window_size {
            return bad(format!(
                "overlap {} must satisfy 0 < o < w = {}",
                self.overlap, self.window_size
            ));
        }
        if self.hop_length == 0 {
            return bad("hop_length must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.confidence_threshold) {
            return bad(format!(
                "confidence_threshold {} outside [0, 1]",
                self.confidence_threshold
            ));
        }
        if self.feature_dim == 0 || self.class_count == 0 {
            return bad("feature_dim and class_count must be positive".into());
        }
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        self.stft().validate()?;
        self.generator.validate()?;
        if self.generator.input_dim != self.feature_dim {
            return bad(format!(
                "generator input_dim {} != feature_dim {}",
                self.generator.input_dim, self.feature_dim
            ));
        }
        if self.generator.output_bins != self.n_fft / 2 + 1 {
            return bad(format!(
                "generator produces {} bins but n_fft {} needs {}",
                self.generator.output_bins,
                self.n_fft,
                self.n_fft / 2 + 1
            ));
        }
        if !(self.gap_ms >= 0.0) {
            return bad("gap_ms must be non-negative".into());
        }
        Ok(())
    }

    pub fn nms_params(&self) -> NmsParams {
        NmsParams {
            window: self.window_size,
            hop: self.hop_length,
            overlap: self.overlap,
            threshold: self.confidence_threshold,
        }
    }

    pub fn stft(&self) -> StftConfig {
        StftConfig {
            n_fft: self.n_fft,
            hop: self.hop,
        }
    }

    /// Samples of audio one detection turns into.
    pub fn per_sign_samples(&self) -> usize {
        (self.generator.output_frames - 1) * self.hop + self.n_fft
    }

    pub fn gap_samples(&self) -> usize {
        (self.gap_ms * 1e-3 * self.sample_rate as f64).round() as usize
    }
}

/// Ordered, distinct gloss labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GlossVocab {
    labels: Vec<String>,
    index: HashMap<String, usize>,
}

impl GlossVocab {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidInput("vocabulary must not be empty".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate gloss {l:?}")));
            }
        }
        Ok(Self { labels, index })
    }

    /// `CLASS_0 .. CLASS_{k-1}`.
    pub fn numbered(k: usize) -> Result<Self> {
        Self::new((0..k).map(|i| format!("CLASS_{i}")).collect())
    }

    /// One gloss per non-empty line.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> Option<&str> {
        self.labels.get(i).map(String::as_str)
    }

    pub fn index_of(&self, gloss: &str) -> Option<usize> {
        self.index.get(gloss).copied()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reported_inference_settings() {
        let cfg: PipelineConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg.window_size, 50);
        assert_eq!(cfg.hop_length, 3);
        assert_eq!(cfg.confidence_threshold, 0.7);
        cfg.validate().unwrap();
    }

    #[test]
    fn toy_is_valid() {
        PipelineConfig::toy().validate().unwrap();
    }

    #[test]
    fn rejects_bad_overlap() {
        let mut cfg = PipelineConfig::toy();
        cfg.overlap = cfg.window_size;
        assert!(cfg.validate().is_err());
        cfg.overlap = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn vocab_lookup() {
        let v = GlossVocab::new(vec!["HELLO".into(), "HELP".into()]).unwrap();
        assert_eq!(v.index_of("HELP"), Some(1));
        assert_eq!(v.label(0), Some("HELLO"));
        assert!(GlossVocab::new(vec!["A".into(), "A".into()]).is_err());
        assert!(GlossVocab::new(vec![]).is_err());
    }
}
