//! Streaming sign-gesture to speech engine.
//!
//! A stream of video frames is windowed, a pluggable extractor turns each
//! window into features and class confidences, temporal non-maximum
//! suppression picks one window per sign, a generator maps its features to a
//! complex spectrogram, and an inverse STFT renders audio.

// Validation uses `!(x >= 0.0)` on purpose so NaN is rejected, and the
// numeric kernels index several buffers in lockstep.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod audio;
pub mod config;
pub mod datasets;
pub mod dsp;
pub mod error;
pub mod extractor;
pub mod ingest;
pub mod metrics;
pub mod nms;
pub mod pipeline;
pub mod scalar;
pub mod specgen;
pub mod spectrogram;
pub mod tensor;
pub mod train;

pub use audio::AudioBuffer;
pub use config::{GlossVocab, PipelineConfig};
pub use error::{Error, Result};
pub use extractor::{ConfidenceVector, FeatureExtractor, FeatureVector};
pub use nms::{Detection, NmsParams, NmsState};
pub use pipeline::{run_batch, run_stream, PipelineRun};
pub use spectrogram::ComplexSpectrogram;
pub use tensor::Tensor;
