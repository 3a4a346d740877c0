use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::optim::{Adam, AdamConfig, Sgd, SgdConfig};
use super::schedule::{EarlyStop, Scheduler};
use crate::error::{Error, Result};
use crate::extractor::{cross_entropy, cross_entropy_grad, ToyClassifier};
use crate::scalar::ParamSet;
use crate::specgen::{complex_loss_with_grad, GeneratorWeights, LossWeights, Mode};

/// One generator training pair: features and the target spectrogram planes
/// (`bins x frames`, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct SpecgenSample {
    pub features: Vec<f32>,
    pub real: Vec<f32>,
    pub imag: Vec<f32>,
}

/// One joint training example: pooled classifier input, class label and
/// target spectrogram planes.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedSample {
    pub input: Vec<f32>,
    pub label: usize,
    pub real: Vec<f32>,
    pub imag: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub lrs: Vec<f64>,
}

/// Per-epoch losses and rates, plus the loss of every optimizer step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub step_losses: Vec<f64>,
    pub stopped_early: bool,
    pub best_epoch: usize,
}

impl TrainHistory {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

fn seed_for(seed: u64, a: u64, b: u64) -> u64 {
    seed ^ a.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ b.wrapping_mul(0xc2b2_ae3d_27d4_eb4f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpecgenTrainConfig {
    pub max_epochs: usize,
    /// Stop after this many optimizer steps, if set.
    pub max_iterations: Option<usize>,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub loss: LossWeights,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub early_stop_patience: Option<usize>,
    pub seed: u64,
}

impl Default for SpecgenTrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            max_iterations: None,
            batch_size: 64,
            adam: AdamConfig::default(),
            loss: LossWeights::default(),
            plateau_factor: 0.1,
            plateau_patience: 3,
            early_stop_patience: Some(10),
            seed: 0,
        }
    }
}

/// Mean loss of `samples` under eval-mode generation.
pub fn specgen_eval_loss(weights: &GeneratorWeights<f32>, samples: &[SpecgenSample], loss: &LossWeights) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for s in samples {
        let out = weights.forward(&s.features, Mode::Eval)?;
        total += complex_loss_with_grad(&s.real, &s.imag, &out.real, &out.imag, loss)?.0.total;
    }
    Ok(total / samples.len() as f64)
}

/// Trains the generator with Adam on mini-batches (mean loss per batch),
/// a plateau scheduler on the validation loss, and optional early
/// stopping. The weights left in `weights` are the best-validation ones.
///
/// With an empty `val` set the training set doubles as validation.
pub fn train_specgen(
    weights: &mut GeneratorWeights<f32>,
    train: &[SpecgenSample],
    val: &[SpecgenSample],
    cfg: &SpecgenTrainConfig,
) -> Result<TrainHistory> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
    }
    cfg.loss.validate()?;
    let val = if val.is_empty() { train } else { val };
    let mut adam = Adam::<f32>::new(cfg.adam)?;
    let mut sched = Scheduler::plateau(cfg.adam.lr, cfg.plateau_factor, cfg.plateau_patience)?;
    let mut stop = cfg.early_stop_patience.map(EarlyStop::new).transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    let mut best = (f64::INFINITY, weights.clone());
    let mut iteration = 0usize;

    'epochs: for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut epoch_loss, mut batches) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            if cfg.max_iterations.is_some_and(|m| iteration >= m) {
                break;
            }
            let mut grads = GeneratorWeights::<f32>::zeros(&weights.params)?;
            let mut batch_loss = 0.0;
            for (k, &i) in batch.iter().enumerate() {
                let s = &train[i];
                let mode = Mode::Train {
                    seed: seed_for(cfg.seed, iteration as u64, k as u64),
                };
                let (out, trace) = weights.forward_traced(&s.features, mode)?;
                let (b, gr, gi) = complex_loss_with_grad(&s.real, &s.imag, &out.real, &out.imag, &cfg.loss)?;
                if !b.total.is_finite() {
                    return Err(Error::NonFiniteLoss);
                }
                batch_loss += b.total;
                let (g, _) = weights.backward(&trace, &gr, &gi)?;
                grads.add_assign_from(&g)?;
            }
            grads.scale(1.0 / batch.len() as f32);
            adam.step(weights, &grads)?;
            let mean = batch_loss / batch.len() as f64;
            history.step_losses.push(mean);
            epoch_loss += mean;
            batches += 1;
            iteration += 1;
        }
        if batches == 0 {
            break;
        }
        let val_loss = specgen_eval_loss(weights, val, &cfg.loss)?;
        let lr = sched.step(epoch + 1, val_loss);
        adam.set_lr(lr);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / batches as f64,
            val_loss,
            lrs: vec![lr],
        });
        if val_loss < best.0 {
            best = (val_loss, weights.clone());
            history.best_epoch = epoch;
        }
        if let Some(s) = stop.as_mut() {
            if s.update(val_loss) {
                history.stopped_early = true;
                break 'epochs;
            }
        }
    }
    if best.0.is_finite() {
        *weights = best.1;
    }
    Ok(history)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CombinedTrainConfig {
    pub max_epochs: usize,
    /// Stop after this many mini-batch steps, if set.
    pub max_steps: Option<usize>,
    pub batch_size: usize,
    pub sgd: SgdConfig,
    pub adam: AdamConfig,
    pub loss: LossWeights,
    pub plateau_factor: f64,
    pub plateau_patience: usize,
    pub cosine_period: usize,
    pub cosine_min_lr: f64,
    pub early_stop_patience: Option<usize>,
    pub seed: u64,
}

impl Default for CombinedTrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 100,
            max_steps: None,
            batch_size: 4,
            sgd: SgdConfig::default(),
            adam: AdamConfig::default(),
            loss: LossWeights::default(),
            plateau_factor: 0.3,
            plateau_patience: 2,
            cosine_period: 50,
            cosine_min_lr: 0.0,
            early_stop_patience: Some(5),
            seed: 0,
        }
    }
}

/// Mean combined loss `CE + spec * L_spec` under eval mode.
pub fn combined_eval_loss(
    classifier: &ToyClassifier<f32>,
    generator: &GeneratorWeights<f32>,
    samples: &[CombinedSample],
    loss: &LossWeights,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for s in samples {
        let out = classifier.forward(&s.input)?;
        let mut l = cross_entropy(&out.logits, s.label)? as f64;
        if loss.spec != 0.0 {
            let g = generator.forward(&out.features, Mode::Eval)?;
            l += loss.spec * complex_loss_with_grad(&s.real, &s.imag, &g.real, &g.imag, loss)?.0.total;
        }
        total += l;
    }
    Ok(total / samples.len() as f64)
}

/// Joint training of classifier and generator on `CE + spec * L_spec`.
///
/// Each mini-batch is one step: the generator takes an Adam step, and the
/// classifier's batch gradient is queued until `sgd.accumulation` batches
/// are available for one accumulated SGD step. The spectrogram loss also
/// back-propagates into the classifier's features. With `spec == 0` the
/// generator receives no gradient and is left untouched. Plateau
/// scheduling drives the classifier rate, cosine annealing the generator
/// rate; both observe the same validation epochs.
pub fn train_combined(
    classifier: &mut ToyClassifier<f32>,
    generator: &mut GeneratorWeights<f32>,
    train: &[CombinedSample],
    val: &[CombinedSample],
    cfg: &CombinedTrainConfig,
) -> Result<TrainHistory> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
    }
    if classifier.feature_dim != generator.params.input_dim {
        return Err(Error::DimensionMismatch(format!(
            "classifier emits {} features, generator expects {}",
            classifier.feature_dim, generator.params.input_dim
        )));
    }
    cfg.loss.validate()?;
    let val = if val.is_empty() { train } else { val };
    let mut sgd = Sgd::<f32>::new(cfg.sgd)?;
    let mut adam = Adam::<f32>::new(cfg.adam)?;
    let mut plateau = Scheduler::plateau(cfg.sgd.lr, cfg.plateau_factor, cfg.plateau_patience)?;
    let mut cosine = Scheduler::cosine(cfg.adam.lr, cfg.cosine_min_lr, cfg.cosine_period)?;
    let mut stop = cfg.early_stop_patience.map(EarlyStop::new).transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut pending: Vec<ToyClassifier<f32>> = Vec::with_capacity(cfg.sgd.accumulation);
    let mut history = TrainHistory::default();
    let mut best = (f64::INFINITY, classifier.clone(), generator.clone());
    let spec = cfg.loss.spec as f32;
    let mut step = 0usize;

    for epoch in 0..cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut epoch_loss, mut batches) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            if cfg.max_steps.is_some_and(|m| step >= m) {
                break;
            }
            let inv = 1.0 / batch.len() as f32;
            let mut g_cls = ToyClassifier::<f32>::zeros(classifier.pool_grid, classifier.feature_dim, classifier.classes);
            let mut g_gen = GeneratorWeights::<f32>::zeros(&generator.params)?;
            let mut batch_loss = 0.0;
            for (k, &i) in batch.iter().enumerate() {
                let s = &train[i];
                let out = classifier.forward(&s.input)?;
                let mut loss = cross_entropy(&out.logits, s.label)? as f64;
                let grad_logits = cross_entropy_grad(&out.logits, s.label)?;
                let mut grad_features = None;
                if spec != 0.0 {
                    let mode = Mode::Train {
                        seed: seed_for(cfg.seed, step as u64, k as u64),
                    };
                    let (gout, trace) = generator.forward_traced(&out.features, mode)?;
                    let (b, gr, gi) = complex_loss_with_grad(&s.real, &s.imag, &gout.real, &gout.imag, &cfg.loss)?;
                    loss += cfg.loss.spec * b.total;
                    let gr: Vec<f32> = gr.iter().map(|v| v * spec).collect();
                    let gi: Vec<f32> = gi.iter().map(|v| v * spec).collect();
                    let (g, g_phi) = generator.backward(&trace, &gr, &gi)?;
                    g_gen.add_assign_from(&g)?;
                    grad_features = Some(g_phi);
                }
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss);
                }
                batch_loss += loss;
                let g = classifier.backward(&s.input, &out, &grad_logits, grad_features.as_deref())?;
                g_cls.add_assign_from(&g)?;
            }
            g_cls.scale(inv);
            if spec != 0.0 {
                g_gen.scale(inv);
                adam.step(generator, &g_gen)?;
            }
            pending.push(g_cls);
            if pending.len() == cfg.sgd.accumulation {
                sgd.accumulate_step(classifier, &pending)?;
                pending.clear();
            }
            let mean = batch_loss / batch.len() as f64;
            history.step_losses.push(mean);
            epoch_loss += mean;
            batches += 1;
            step += 1;
        }
        if batches == 0 {
            break;
        }
        let val_loss = combined_eval_loss(classifier, generator, val, &cfg.loss)?;
        let cls_lr = plateau.step(epoch + 1, val_loss);
        let gen_lr = cosine.step(epoch + 1, val_loss);
        sgd.set_lr(cls_lr);
        adam.set_lr(gen_lr);
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_loss / batches as f64,
            val_loss,
            lrs: vec![cls_lr, gen_lr],
        });
        if val_loss < best.0 {
            best = (val_loss, classifier.clone(), generator.clone());
            history.best_epoch = epoch;
        }
        if let Some(s) = stop.as_mut() {
            if s.update(val_loss) {
                history.stopped_early = true;
                break;
            }
        }
    }
    if best.0.is_finite() {
        *classifier = best.1;
        *generator = best.2;
    }
    Ok(history)
}
