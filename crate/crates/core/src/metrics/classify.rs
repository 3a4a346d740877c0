use crate::error::{Error, Result};
use crate::extractor::ConfidenceVector;

fn check_labels(n: usize, labels: &[usize], classes: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if n != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} predictions for {} labels",
            labels.len()
        )));
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    Ok(())
}

/// Rank of `label` in `scores`, 0 for the best. Equal scores rank the lower
/// index first.
pub fn label_rank(scores: &[f32], label: usize) -> usize {
    let s = scores[label];
    scores
        .iter()
        .enumerate()
        .filter(|&(j, &v)| v > s || (v == s && j < label))
        .count()
}

/// Fraction of samples whose label is among the `k` highest scores.
pub fn topk_accuracy(confidences: &[ConfidenceVector], labels: &[usize], k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let classes = confidences.first().map_or(0, ConfidenceVector::classes);
    check_labels(confidences.len(), labels, classes)?;
    let mut hits = 0usize;
    for (c, &l) in confidences.iter().zip(labels) {
        if c.classes() != classes {
            return Err(Error::DimensionMismatch(format!(
                "confidence vectors of {} and {classes} classes",
                c.classes()
            )));
        }
        hits += usize::from(label_rank(c.values(), l) < k);
    }
    Ok(hits as f64 / labels.len() as f64)
}

/// Per-class F1 averaged over all `classes`. A class that is neither
/// predicted nor present scores 0 and still counts in the average.
pub fn f1_macro(predictions: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    check_labels(predictions.len(), labels, classes)?;
    if let Some(&label) = predictions.iter().find(|&&p| p >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fn_ = vec![0usize; classes];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p == l {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[l] += 1;
        }
    }
    let sum: f64 = (0..classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(sum / classes as f64)
}
