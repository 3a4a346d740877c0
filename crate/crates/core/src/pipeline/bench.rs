use serde::Serialize;

use super::run_batch;
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::extractor::MockExtractor;
use crate::specgen::GeneratorWeights;

/// Published end-to-end speed of the original system, for context only.
pub const REFERENCE_FPS: f64 = 22.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub frames: usize,
    pub windows: usize,
    pub extractions: usize,
    pub detections: usize,
    pub repetitions: usize,
    pub median_fps: f64,
    pub min_fps: f64,
    pub max_fps: f64,
    /// Extractor-evaluated windows per second at the median run.
    pub windows_per_sec: f64,
    pub reference_fps: f64,
}

/// Runs a stream of `frames` empty frames through the batch pipeline with a
/// [`MockExtractor`] `repetitions` times (at least 3).
pub fn benchmark_throughput(
    frames: usize,
    weights: &GeneratorWeights<f32>,
    config: &PipelineConfig,
    repetitions: usize,
) -> Result<BenchReport> {
    if frames < config.window_size {
        return Err(Error::InvalidInput(format!(
            "stream of {frames} frames is shorter than the window {}",
            config.window_size
        )));
    }
    let reps = repetitions.max(3);
    let stream = vec![(); frames];
    let mock = MockExtractor::new(config.seed, config.feature_dim, config.class_count);
    let mut runs = Vec::with_capacity(reps);
    for _ in 0..reps {
        runs.push(run_batch(&stream, mock.clone(), weights, config)?);
    }
    let mut secs: Vec<f64> = runs.iter().map(|r| r.timing.wall_secs.max(1e-9)).collect();
    secs.sort_by(f64::total_cmp);
    let median = secs[reps / 2];
    let t = &runs[0].timing;
    Ok(BenchReport {
        frames,
        windows: t.windows,
        extractions: t.extractions,
        detections: runs[0].detections.len(),
        repetitions: reps,
        median_fps: frames as f64 / median,
        min_fps: frames as f64 / secs[reps - 1],
        max_fps: frames as f64 / secs[0],
        windows_per_sec: t.extractions as f64 / median,
        reference_fps: REFERENCE_FPS,
    })
}
