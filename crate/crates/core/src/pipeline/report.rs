use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::GlossVocab;
use crate::error::{Error, Result};
use crate::nms::Detection;

/// One entry of the detections JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub emitted_at: usize,
    pub predicted_class: usize,
    pub gloss: String,
    pub max_confidence: f32,
}

/// Labels classes from `vocab`, falling back to `CLASS_{i}` for classes
/// it does not cover.
pub fn detection_records(detections: &[Detection], vocab: Option<&GlossVocab>) -> Vec<DetectionRecord> {
    detections
        .iter()
        .map(|d| DetectionRecord {
            emitted_at: d.emitted_at,
            predicted_class: d.predicted_class,
            gloss: vocab
                .and_then(|v| v.label(d.predicted_class))
                .map_or_else(|| format!("CLASS_{}", d.predicted_class), str::to_string),
            max_confidence: d.max_confidence(),
        })
        .collect()
}

pub fn write_detections_json(
    path: impl AsRef<Path>,
    detections: &[Detection],
    vocab: Option<&GlossVocab>,
) -> Result<()> {
    let path = path.as_ref();
    let json = serde_json::to_string_pretty(&detection_records(detections, vocab))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::{ConfidenceVector, FeatureVector};

    #[test]
    fn records_carry_gloss() {
        let d = Detection {
            emitted_at: 7,
            decided_at: Some(40),
            feature: FeatureVector::new(vec![0.0]),
            confidence: ConfidenceVector::new(vec![0.1, 0.8, 0.1]).unwrap(),
            predicted_class: 1,
        };
        let vocab = GlossVocab::new(vec!["HELLO".into(), "HELP".into()]).unwrap();
        let r = detection_records(std::slice::from_ref(&d), Some(&vocab));
        assert_eq!(r[0].gloss, "HELP");
        assert_eq!(r[0].max_confidence, 0.8);
        let r = detection_records(&[d], None);
        assert_eq!(r[0].gloss, "CLASS_1");
        let json = serde_json::to_value(&r).unwrap();
        let keys: Vec<&String> = json[0].as_object().unwrap().keys().collect();
        assert_eq!(keys.len(), 4);
    }
}
