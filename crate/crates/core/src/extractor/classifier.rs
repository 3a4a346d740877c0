//! A small trainable extractor: grid mean-pooling of the window, a linear
//! feature layer and a linear classification head with softmax scores.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_window_len, ConfidenceVector, FeatureExtractor, FeatureVector};
use crate::error::{Error, Result};
use crate::scalar::{ParamSet, Scalar};
use crate::tensor::Tensor;

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let m = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&x| (x - m).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// `-ln softmax(logits)[label]`, accurate even when the loss is tiny.
pub fn cross_entropy<T: Scalar>(logits: &[T], label: usize) -> Result<T> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let (arg, m) = logits
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    let rest: T = logits
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != arg)
        .map(|(_, &x)| (x - m).exp())
        .sum();
    Ok((m - logits[label]) + rest.ln_1p())
}

/// Gradient of [`cross_entropy`] with respect to the logits:
/// `softmax(logits) - onehot(label)`.
pub fn cross_entropy_grad<T: Scalar>(logits: &[T], label: usize) -> Result<Vec<T>> {
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let mut g = softmax(logits);
    g[label] -= T::one();
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyClassifier<T> {
    pub pool_grid: usize,
    pub feature_dim: usize,
    pub classes: usize,
    /// `feature_dim x input_dim`
    pub feature_weight: Vec<T>,
    pub feature_bias: Vec<T>,
    /// `classes x feature_dim`
    pub head_weight: Vec<T>,
    pub head_bias: Vec<T>,
}

#[derive(Debug, Clone)]
pub struct ClassifierOutput<T> {
    pub features: Vec<T>,
    pub logits: Vec<T>,
    pub probs: Vec<T>,
}

impl<T: Scalar> ToyClassifier<T> {
    pub fn zeros(pool_grid: usize, feature_dim: usize, classes: usize) -> Self {
        let input_dim = 3 * pool_grid * pool_grid;
        Self {
            pool_grid,
            feature_dim,
            classes,
            feature_weight: vec![T::zero(); feature_dim * input_dim],
            feature_bias: vec![T::zero(); feature_dim],
            head_weight: vec![T::zero(); classes * feature_dim],
            head_bias: vec![T::zero(); classes],
        }
    }

    /// Uniform `±1/sqrt(fan_in)` weights, zero biases.
    pub fn init(pool_grid: usize, feature_dim: usize, classes: usize, seed: u64) -> Self {
        let mut m = Self::zeros(pool_grid, feature_dim, classes);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b1 = 1.0 / (m.input_dim() as f64).sqrt();
        m.feature_weight
            .iter_mut()
            .for_each(|w| *w = T::c(rng.gen_range(-b1..b1)));
        let b2 = 1.0 / (feature_dim as f64).sqrt();
        m.head_weight
            .iter_mut()
            .for_each(|w| *w = T::c(rng.gen_range(-b2..b2)));
        m
    }

    pub fn input_dim(&self) -> usize {
        3 * self.pool_grid * self.pool_grid
    }

    /// Mean-pools frames of shape `3 x width x height` onto a
    /// `3 x grid x grid` lattice, averaging over time as well.
    pub fn pool(&self, window: &[Tensor]) -> Result<Vec<T>> {
        let g = self.pool_grid;
        let mut sums = vec![0.0f64; 3 * g * g];
        let mut counts = vec![0usize; 3 * g * g];
        if window.is_empty() {
            return Err(Error::EmptyClip);
        }
        for frame in window {
            let s = frame.shape();
            if s.len() != 3 || s[0] != 3 || s[1] < g || s[2] < g {
                return Err(Error::DimensionMismatch(format!(
                    "frame shape {s:?} cannot be pooled onto a {g}x{g} grid"
                )));
            }
            let (w, h) = (s[1], s[2]);
            let data = frame.data();
            for c in 0..3 {
                for x in 0..w {
                    let gx = x * g / w;
                    for y in 0..h {
                        let gy = y * g / h;
                        let cell = (c * g + gx) * g + gy;
                        sums[cell] += data[(c * w + x) * h + y] as f64;
                        counts[cell] += 1;
                    }
                }
            }
        }
        Ok(sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| T::c(s / n as f64))
            .collect())
    }

    pub fn forward(&self, input: &[T]) -> Result<ClassifierOutput<T>> {
        let d = self.input_dim();
        if input.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "classifier input has {} values, expected {d}",
                input.len()
            )));
        }
        let features: Vec<T> = (0..self.feature_dim)
            .map(|j| {
                let row = &self.feature_weight[j * d..(j + 1) * d];
                row.iter().zip(input).map(|(&w, &x)| w * x).sum::<T>() + self.feature_bias[j]
            })
            .collect();
        let n = self.feature_dim;
        let logits: Vec<T> = (0..self.classes)
            .map(|c| {
                let row = &self.head_weight[c * n..(c + 1) * n];
                row.iter().zip(&features).map(|(&w, &f)| w * f).sum::<T>() + self.head_bias[c]
            })
            .collect();
        let probs = softmax(&logits);
        Ok(ClassifierOutput {
            features,
            logits,
            probs,
        })
    }

    /// Parameter gradients given upstream gradients on the logits and,
    /// optionally, directly on the features (e.g. from a downstream generator).
    pub fn backward(
        &self,
        input: &[T],
        out: &ClassifierOutput<T>,
        grad_logits: &[T],
        grad_features: Option<&[T]>,
    ) -> Result<Self> {
        let (d, n, k) = (self.input_dim(), self.feature_dim, self.classes);
        if grad_logits.len() != k || grad_features.is_some_and(|g| g.len() != n) {
            return Err(Error::DimensionMismatch("upstream gradient size".into()));
        }
        let mut grads = Self::zeros(self.pool_grid, n, k);
        let mut g_feat = match grad_features {
            Some(g) => g.to_vec(),
            None => vec![T::zero(); n],
        };
        for c in 0..k {
            let gl = grad_logits[c];
            grads.head_bias[c] = gl;
            for j in 0..n {
                grads.head_weight[c * n + j] = gl * out.features[j];
                g_feat[j] += gl * self.head_weight[c * n + j];
            }
        }
        for j in 0..n {
            grads.feature_bias[j] = g_feat[j];
            for i in 0..d {
                grads.feature_weight[j * d + i] = g_feat[j] * input[i];
            }
        }
        Ok(grads)
    }

    /// Cross-entropy of the classifier on one pooled input, and its gradients.
    pub fn loss_and_grad(&self, input: &[T], label: usize) -> Result<(T, Self)> {
        let out = self.forward(input)?;
        let loss = cross_entropy(&out.logits, label)?;
        let gl = cross_entropy_grad(&out.logits, label)?;
        Ok((loss, self.backward(input, &out, &gl, None)?))
    }

    pub fn cast<U: Scalar>(&self) -> ToyClassifier<U> {
        let cv = |v: &[T]| v.iter().map(|x| U::c(x.f64())).collect();
        ToyClassifier {
            pool_grid: self.pool_grid,
            feature_dim: self.feature_dim,
            classes: self.classes,
            feature_weight: cv(&self.feature_weight),
            feature_bias: cv(&self.feature_bias),
            head_weight: cv(&self.head_weight),
            head_bias: cv(&self.head_bias),
        }
    }
}

impl<T: Scalar> ParamSet<T> for ToyClassifier<T> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[T])) {
        f("feature.weight", &self.feature_weight);
        f("feature.bias", &self.feature_bias);
        f("head.weight", &self.head_weight);
        f("head.bias", &self.head_bias);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [T])) {
        f("feature.weight", &mut self.feature_weight);
        f("feature.bias", &mut self.feature_bias);
        f("head.weight", &mut self.head_weight);
        f("head.bias", &mut self.head_bias);
    }
}

/// [`ToyClassifier`] as a window extractor: features are the feature-layer
/// output, confidences the softmax scores.
#[derive(Debug, Clone)]
pub struct ToyExtractor {
    pub model: ToyClassifier<f32>,
    pub window_len: Option<usize>,
}

impl ToyExtractor {
    pub fn new(model: ToyClassifier<f32>) -> Self {
        Self {
            model,
            window_len: None,
        }
    }

    pub fn with_window_len(mut self, w: usize) -> Self {
        self.window_len = Some(w);
        self
    }
}

impl FeatureExtractor<Tensor> for ToyExtractor {
    fn extract(&mut self, window: &[Tensor], _position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        check_window_len(self.window_len, window.len())?;
        let pooled = self.model.pool(window)?;
        let out = self.model.forward(&pooled)?;
        // softmax output can round a hair above 1 in f32
        let conf = out.probs.iter().map(|p| p.clamp(0.0, 1.0)).collect();
        Ok((FeatureVector::new(out.features), ConfidenceVector::new(conf)?))
    }
}
