//! Window feature extraction: `(features, confidences) = E(window)`.
//!
//! The backbone is pluggable through [`FeatureExtractor`]. Shipped sources
//! are a hash-based mock, a scripted replay, an on-disk replay and a small
//! trainable classifier.

mod classifier;
mod sources;

pub use classifier::{
    cross_entropy, cross_entropy_grad, softmax, ClassifierOutput, ToyClassifier, ToyExtractor,
};
pub use sources::{FileBackedExtractor, MockExtractor, ScriptedExtractor};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Visual embedding of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Tensor);

impl FeatureVector {
    pub fn new(values: Vec<f32>) -> Self {
        Self(Tensor::from_vec(values))
    }

    pub fn values(&self) -> &[f32] {
        self.0.data()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Per-class scores of one window, each in `[0, 1]`. They need not sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceVector(pub Tensor);

impl ConfidenceVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("confidence vector is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidInput(format!("confidence {v} outside [0, 1]")));
        }
        Ok(Self(Tensor::from_vec(values)))
    }

    pub fn values(&self) -> &[f32] {
        self.0.data()
    }

    pub fn max(&self) -> f32 {
        self.0.max()
    }

    pub fn argmax(&self) -> usize {
        self.0.argmax()
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }
}

/// A feature extractor over windows of frames of type `F`.
///
/// `position` is the 1-based window position the caller is evaluating.
pub trait FeatureExtractor<F> {
    fn extract(&mut self, window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)>;
}

impl<F, E: FeatureExtractor<F> + ?Sized> FeatureExtractor<F> for &mut E {
    fn extract(&mut self, window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        (**self).extract(window, position)
    }
}

impl<F, E: FeatureExtractor<F> + ?Sized> FeatureExtractor<F> for Box<E> {
    fn extract(&mut self, window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        (**self).extract(window, position)
    }
}

pub(crate) fn check_window_len(expected: Option<usize>, found: usize) -> Result<()> {
    match expected {
        Some(expected) if expected != found => Err(Error::WrongWindowLength { expected, found }),
        _ => Ok(()),
    }
}

/// The closed set of extractors the pipeline and CLI know how to build.
#[derive(Debug, Clone)]
pub enum ExtractorSource {
    Mock(MockExtractor),
    Scripted(ScriptedExtractor),
    FileBacked(FileBackedExtractor),
    ToyClassifier(ToyExtractor),
}

impl FeatureExtractor<Tensor> for ExtractorSource {
    fn extract(&mut self, window: &[Tensor], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        match self {
            ExtractorSource::Mock(e) => e.extract(window, position),
            ExtractorSource::Scripted(e) => e.extract(window, position),
            ExtractorSource::FileBacked(e) => e.extract(window, position),
            ExtractorSource::ToyClassifier(e) => e.extract(window, position),
        }
    }
}

/// Free-function form of [`FeatureExtractor::extract`].
pub fn extract<F, E: FeatureExtractor<F> + ?Sized>(
    source: &mut E,
    window: &[F],
    position: usize,
) -> Result<(FeatureVector, ConfidenceVector)> {
    source.extract(window, position)
}
