//! Audio, sequence and classification quality metrics, plus JSON reports
//! combining them.

mod audio;
mod classify;
mod stoi;
mod text;

pub use audio::{mcd, mcd_with, mse_metric, snr, SNR_CAP_DB};
pub use classify::{f1_macro, label_rank, topk_accuracy};
pub use stoi::{resample_linear, stoi, stoi_min_duration, STOI_RATE};
pub use text::{bleu, cer, levenshtein, wer, TranscriptPair};

use serde::Serialize;

use crate::audio::AudioBuffer;
use crate::error::Result;
use crate::tensor::Tensor;

/// Audio comparison. Both inputs are truncated to the shorter length;
/// metrics that cannot be computed on the input are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AudioReport {
    pub samples_compared: usize,
    pub sample_rate: u32,
    pub snr_db: Option<f64>,
    pub mse: f64,
    pub stoi: Option<f64>,
    pub mcd: Option<f64>,
}

pub fn audio_report(reference: &AudioBuffer, test: &AudioBuffer) -> Result<AudioReport> {
    let n = reference.len().min(test.len());
    let r = AudioBuffer::new(reference.samples[..n].to_vec(), reference.sample_rate);
    let t = AudioBuffer::new(test.samples[..n].to_vec(), test.sample_rate);
    let mse = mse_metric(&Tensor::from_vec(r.samples.clone()), &Tensor::from_vec(t.samples.clone()))?;
    Ok(AudioReport {
        samples_compared: n,
        sample_rate: reference.sample_rate,
        snr_db: snr(&r, &t).ok(),
        mse,
        stoi: stoi(&r, &t).ok(),
        mcd: mcd(&r, &t).ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorReport {
    pub shape: Vec<usize>,
    pub mse: f64,
}

pub fn tensor_report(a: &Tensor, b: &Tensor) -> Result<TensorReport> {
    Ok(TensorReport {
        shape: a.shape().to_vec(),
        mse: mse_metric(a, b)?,
    })
}

/// Per-line transcript scores and their means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranscriptReport {
    pub pairs: usize,
    pub mean_wer: f64,
    pub mean_cer: f64,
    pub mean_bleu: f64,
    pub per_pair: Vec<[f64; 3]>,
}

pub fn transcript_report(pairs: &[TranscriptPair]) -> Result<TranscriptReport> {
    let per_pair = pairs
        .iter()
        .map(|p| Ok([wer(p)?, cer(p)?, bleu(p)?]))
        .collect::<Result<Vec<_>>>()?;
    let mean = |i: usize| {
        if per_pair.is_empty() {
            0.0
        } else {
            per_pair.iter().map(|s| s[i]).sum::<f64>() / per_pair.len() as f64
        }
    };
    Ok(TranscriptReport {
        pairs: pairs.len(),
        mean_wer: mean(0),
        mean_cer: mean(1),
        mean_bleu: mean(2),
        per_pair,
    })
}
