//! Independent reference implementations and stream generators shared by
//! the integration tests. Nothing here calls into the code under test except
//! for plain data types and `mel_cepstra`.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signvox::audio::AudioBuffer;
use signvox::dsp::{mel_cepstra, MelConfig};
use signvox::extractor::{ConfidenceVector, FeatureExtractor, FeatureVector};
use signvox::nms::NmsParams;
use signvox::{Error, Result};

/// One scripted window: feature and per-class scores.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub feature: Vec<f32>,
    pub confidence: Vec<f32>,
}

impl Entry {
    pub fn score(&self) -> f32 {
        self.confidence.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }
}

/// An emitted window as seen by the reference: position plus payload.
#[derive(Debug, Clone, PartialEq)]
pub struct RefEmission {
    pub position: usize,
    pub feature: Vec<f32>,
    pub confidence: Vec<f32>,
}

/// Batch suppression over a stream of `frames` frames, written as a direct
/// loop over window positions. `table[t - 1]` is the extractor output at
/// position `t`. The pending candidate is appended at the end.
pub fn reference_nms(p: &NmsParams, frames: usize, table: &[Entry]) -> Vec<RefEmission> {
    let mut out = Vec::new();
    if frames < p.window {
        return out;
    }
    let positions = frames - p.window + 1;
    let theta = p.threshold;
    let mut best: Option<(usize, &Entry)> = None;
    for t in 1..=positions {
        if t > 1 && (t - 1) % p.hop != 0 {
            continue;
        }
        let c = &table[t - 1];
        let m = c.score();
        if t == 1 {
            if m >= theta {
                best = Some((t, c));
            }
            continue;
        }
        match best {
            None => {
                if m > theta {
                    best = Some((t, c));
                }
            }
            Some((tb, cb)) => {
                if t - tb > p.window - p.overlap {
                    out.push(RefEmission {
                        position: tb,
                        feature: cb.feature.clone(),
                        confidence: cb.confidence.clone(),
                    });
                    best = if m > theta { Some((t, c)) } else { None };
                } else if m > cb.score() {
                    best = Some((t, c));
                }
            }
        }
    }
    if let Some((tb, cb)) = best {
        out.push(RefEmission {
            position: tb,
            feature: cb.feature.clone(),
            confidence: cb.confidence.clone(),
        });
    }
    out
}

/// Extractor over `usize` frame ids that replays a table by position and
/// checks that each window holds exactly the frames `t - 1 .. t - 1 + w`.
pub struct TableExtractor {
    pub table: Vec<Entry>,
    pub window: usize,
    pub calls: Vec<usize>,
}

impl TableExtractor {
    pub fn new(table: Vec<Entry>, window: usize) -> Self {
        Self {
            table,
            window,
            calls: Vec::new(),
        }
    }
}

impl FeatureExtractor<usize> for TableExtractor {
    fn extract(&mut self, window: &[usize], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        let expected: Vec<usize> = (position - 1..position - 1 + self.window).collect();
        if window != expected.as_slice() {
            return Err(Error::InvalidInput(format!(
                "window at position {position} holds {window:?}"
            )));
        }
        self.calls.push(position);
        let e = self.table.get(position - 1).ok_or(Error::MissingWindow(position))?;
        Ok((FeatureVector::new(e.feature.clone()), ConfidenceVector::new(e.confidence.clone())?))
    }
}

/// A randomized suppression scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub params: NmsParams,
    pub frames: usize,
    pub table: Vec<Entry>,
}

/// Draws parameters in w 4..=64, hop 1..=8, overlap 1..w, threshold
/// 0.3..=0.9 and a stream of at most 500 frames. Scores come from a coarse
/// grid, exact threshold hits and uniform draws so ties and boundary values
/// occur often.
pub fn random_scenario(rng: &mut ChaCha8Rng) -> Scenario {
    let window = rng.gen_range(4..=64);
    let params = NmsParams {
        window,
        hop: rng.gen_range(1..=8),
        overlap: rng.gen_range(1..window),
        threshold: rng.gen_range(0.3f32..=0.9),
    };
    let frames: usize = rng.gen_range(0..=500);
    let positions = frames.saturating_sub(window - 1);
    let classes = rng.gen_range(1..=4);
    let dim = rng.gen_range(1..=3);
    let table = (0..positions)
        .map(|_| {
            let top = match rng.gen_range(0..4) {
                0 => params.threshold,
                1 => rng.gen_range(0..=10) as f32 / 10.0,
                _ => rng.gen::<f32>(),
            };
            let winner = rng.gen_range(0..classes);
            let confidence = (0..classes)
                .map(|c| if c == winner { top } else { rng.gen_range(0.0..=top) })
                .collect();
            let feature = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
            Entry { feature, confidence }
        })
        .collect();
    Scenario { params, frames, table }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Full-matrix edit distance.
pub fn reference_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, v) in d[0].iter_mut().enumerate() {
        *v = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

/// Mel cepstral distortion recomputed frame by frame from the cepstra.
pub fn reference_mcd(a: &AudioBuffer, b: &AudioBuffer, cfg: &MelConfig) -> f64 {
    let ca = mel_cepstra(a, cfg).unwrap();
    let cb = mel_cepstra(b, cfg).unwrap();
    let frames = ca.shape()[0].min(cb.shape()[0]);
    let n = cfg.n_coeffs;
    let mut acc = 0.0;
    for m in 0..frames {
        let mut sq = 0.0;
        for k in 0..n {
            let d = ca.data()[m * n + k] as f64 - cb.data()[m * n + k] as f64;
            sq += d * d;
        }
        acc += 10.0 / 10f64.ln() * (2.0 * sq).sqrt();
    }
    acc / frames as f64
}

/// Uniform noise in `[-amp, amp]`.
pub fn noise(rng: &mut ChaCha8Rng, len: usize, amp: f32, sample_rate: u32) -> AudioBuffer {
    AudioBuffer::new((0..len).map(|_| rng.gen_range(-amp..=amp)).collect(), sample_rate)
}
