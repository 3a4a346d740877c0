//! Temporal non-maximal suppression over a frame stream.
//!
//! [`NmsState`] is an incremental state machine. Frames are buffered until a
//! full window of `w` frames exists; from then on every new frame advances
//! the window position `t` by one. The extractor runs at position 1 and at
//! every later position with `(t - 1) % hop == 0`.
//!
//! Decision rules at an evaluated position with scores `C`:
//!
//! * `t == 1`: the window becomes the best candidate when `max(C) >= θ`.
//! * no candidate: the window becomes the candidate when `max(C) > θ`.
//! * `t - t_best > w - o`: the candidate is emitted; the current window
//!   replaces it when `max(C) > θ`, otherwise the candidate is cleared.
//! * otherwise the window replaces the candidate only when its `max(C)` is
//!   strictly greater, so ties keep the earlier window.
//!
//! Note the `>=` at `t == 1` versus `>` everywhere else.
//!
//! A stream that ends with a pending candidate leaves it unreported;
//! [`NmsState::flush`] returns it explicitly and resets the state.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::{ConfidenceVector, FeatureExtractor, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmsParams {
    /// Window size `w` in frames.
    pub window: usize,
    /// Hop between evaluated window positions.
    pub hop: usize,
    /// Overlap `o`; emitted bests are separated by more than `w - o` positions.
    pub overlap: usize,
    /// Confidence threshold `θ`.
    pub threshold: f32,
}

impl NmsParams {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidConfig("window must be at least 1".into()));
        }
        if self.hop == 0 {
            return Err(Error::InvalidConfig("hop must be at least 1".into()));
        }
        if self.overlap >= self.window {
            return Err(Error::InvalidConfig(format!(
                "overlap {} must be below window {}",
                self.overlap, self.window
            )));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        Ok(())
    }

    /// Minimum gap `w - o`; emission requires a strictly larger gap.
    pub fn separation(&self) -> usize {
        self.window - self.overlap
    }

    /// Whether the extractor runs at window position `t` (1-based).
    pub fn evaluates(&self, t: usize) -> bool {
        t == 1 || (t >= 1 && (t - 1).is_multiple_of(self.hop))
    }
}

/// An emitted sign event.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Window position of the emitted best (`t_best` when it was returned).
    pub emitted_at: usize,
    /// Window position at which the emission was decided; `None` for a flush.
    pub decided_at: Option<usize>,
    pub feature: FeatureVector,
    pub confidence: ConfidenceVector,
    pub predicted_class: usize,
}

impl Detection {
    pub fn max_confidence(&self) -> f32 {
        self.confidence.max()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    position: usize,
    feature: FeatureVector,
    confidence: ConfidenceVector,
    score: f32,
}

impl Candidate {
    fn into_detection(self, decided_at: Option<usize>) -> Detection {
        Detection {
            emitted_at: self.position,
            decided_at,
            predicted_class: self.confidence.argmax(),
            feature: self.feature,
            confidence: self.confidence,
        }
    }
}

/// Mutable state of the suppression loop for one stream.
#[derive(Debug, Clone)]
pub struct NmsState<F> {
    params: NmsParams,
    buffer: VecDeque<F>,
    t: usize,
    best: Option<Candidate>,
    extractions: usize,
}

impl<F> NmsState<F> {
    pub fn new(params: NmsParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            buffer: VecDeque::with_capacity(params.window),
            t: 0,
            best: None,
            extractions: 0,
        })
    }

    pub fn params(&self) -> &NmsParams {
        &self.params
    }

    /// Current window position (0 until the buffer first fills).
    pub fn position(&self) -> usize {
        self.t
    }

    pub fn best_position(&self) -> Option<usize> {
        self.best.as_ref().map(|b| b.position)
    }

    /// `max(C_best)`, or 0 when there is no candidate.
    pub fn best_score(&self) -> f32 {
        self.best.as_ref().map_or(0.0, |b| b.score)
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Number of extractor calls made so far.
    pub fn extractions(&self) -> usize {
        self.extractions
    }

    /// Feeds one frame; returns a detection when one is emitted.
    pub fn push<E>(&mut self, frame: F, extractor: &mut E) -> Result<Option<Detection>>
    where
        E: FeatureExtractor<F> + ?Sized,
    {
        if self.buffer.len() == self.params.window {
            self.buffer.pop_front();
        }
        self.buffer.push_back(frame);
        if self.buffer.len() < self.params.window {
            return Ok(None);
        }
        self.t += 1;
        let t = self.t;
        if !self.params.evaluates(t) {
            return Ok(None);
        }
        let (feature, confidence) = extractor.extract(self.buffer.make_contiguous(), t)?;
        self.extractions += 1;
        Ok(self.observe(t, feature, confidence))
    }

    /// Applies the decision rules to an already-extracted window at the
    /// current evaluated position `t`. Used by batch callers that extract
    /// windows themselves; [`push`](Self::push) routes through here too.
    pub(crate) fn observe(
        &mut self,
        t: usize,
        feature: FeatureVector,
        confidence: ConfidenceVector,
    ) -> Option<Detection> {
        let score = confidence.max();
        let theta = self.params.threshold;
        let candidate = Candidate {
            position: t,
            feature,
            confidence,
            score,
        };
        if t == 1 {
            if score >= theta {
                self.best = Some(candidate);
            }
            return None;
        }
        let Some(best) = self.best.as_ref() else {
            if score > theta {
                self.best = Some(candidate);
            }
            return None;
        };
        if t - best.position > self.params.separation() {
            let emitted = self.best.take().expect("checked above");
            if score > theta {
                self.best = Some(candidate);
            }
            return Some(emitted.into_detection(Some(t)));
        }
        if score > best.score {
            self.best = Some(candidate);
        }
        None
    }

    /// Advances the position counter without buffering frames; batch mode.
    pub(crate) fn advance(&mut self) -> usize {
        self.t += 1;
        self.t
    }

    pub(crate) fn count_extraction(&mut self) {
        self.extractions += 1;
    }

    /// Ends the stream: returns the pending candidate, if any, and resets.
    pub fn flush(&mut self) -> Option<Detection> {
        let pending = self.best.take().map(|b| b.into_detection(None));
        self.buffer.clear();
        self.t = 0;
        self.extractions = 0;
        pending
    }
}

/// Runs a whole stream through a fresh state, flushing at the end.
pub fn run_nms<F, E>(
    params: NmsParams,
    frames: impl IntoIterator<Item = F>,
    extractor: &mut E,
) -> Result<Vec<Detection>>
where
    E: FeatureExtractor<F> + ?Sized,
{
    let mut state = NmsState::new(params)?;
    let mut out = Vec::new();
    for frame in frames {
        if let Some(d) = state.push(frame, extractor)? {
            out.push(d);
        }
    }
    out.extend(state.flush());
    Ok(out)
}

/// Replays per-position max-confidence scores (index 0 is position 1) as
/// single-class windows whose feature is `[position]`.
#[derive(Debug, Clone)]
pub struct ScoreTrack {
    scores: Vec<f32>,
}

impl ScoreTrack {
    pub fn new(scores: Vec<f32>) -> Result<Self> {
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidInput(format!("score {s} outside [0, 1]")));
        }
        Ok(Self { scores })
    }

    /// Frames needed to visit every scored position with window `w`.
    pub fn frame_count(&self, window: usize) -> usize {
        if self.scores.is_empty() {
            0
        } else {
            self.scores.len() + window - 1
        }
    }
}

impl<F> FeatureExtractor<F> for ScoreTrack {
    fn extract(&mut self, _window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        let s = *self
            .scores
            .get(position.wrapping_sub(1))
            .ok_or(Error::MissingWindow(position))?;
        Ok((
            FeatureVector::new(vec![position as f32]),
            ConfidenceVector::new(vec![s])?,
        ))
    }
}

/// Emission record of a score-track simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Emission {
    pub position: usize,
    pub flushed: bool,
}

/// Runs NMS over a score track; the final entry is the flushed candidate,
/// if any and if `flush` is set.
pub fn simulate_scores(scores: &[f32], params: NmsParams, flush: bool) -> Result<Vec<Emission>> {
    let mut track = ScoreTrack::new(scores.to_vec())?;
    let mut state = NmsState::new(params)?;
    let mut out = Vec::new();
    for _ in 0..track.frame_count(params.window) {
        if let Some(d) = state.push((), &mut track)? {
            out.push(Emission {
                position: d.emitted_at,
                flushed: false,
            });
        }
    }
    if flush {
        if let Some(d) = state.flush() {
            out.push(Emission {
                position: d.emitted_at,
                flushed: true,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(w: usize, hop: usize, o: usize, th: f32) -> NmsParams {
        NmsParams {
            window: w,
            hop,
            overlap: o,
            threshold: th,
        }
    }

    #[test]
    fn short_stream_never_extracts() {
        let mut track = ScoreTrack::new(vec![1.0; 10]).unwrap();
        let mut s = NmsState::new(params(5, 1, 2, 0.5)).unwrap();
        for _ in 0..4 {
            assert!(s.push((), &mut track).unwrap().is_none());
        }
        assert_eq!(s.extractions(), 0);
        assert_eq!(s.position(), 0);
        assert!(s.flush().is_none());
    }

    #[test]
    fn below_threshold_never_detects() {
        let e = simulate_scores(&[0.2, 0.4, 0.49, 0.1, 0.3, 0.45], params(3, 1, 1, 0.5), true).unwrap();
        assert!(e.is_empty());
    }

    #[test]
    fn worked_example() {
        // w=4, o=2: separation 2. Best at t=1 (0.9); t=4 is 3 > 2 away.
        let p = params(4, 1, 2, 0.5);
        let mut track = ScoreTrack::new(vec![0.9, 0.3, 0.4, 0.6]).unwrap();
        let mut s = NmsState::new(p).unwrap();
        let mut emitted = Vec::new();
        for _ in 0..track.frame_count(4) {
            if let Some(d) = s.push((), &mut track).unwrap() {
                emitted.push(d);
            }
        }
        assert_eq!(emitted.len(), 1);
        assert_eq!(emitted[0].emitted_at, 1);
        assert_eq!(emitted[0].decided_at, Some(4));
        assert_eq!(emitted[0].feature.values(), &[1.0]);
        assert_eq!(s.best_position(), Some(4));
        let last = s.flush().unwrap();
        assert_eq!(last.emitted_at, 4);
        assert!(s.flush().is_none());
    }

    #[test]
    fn first_position_uses_inclusive_threshold() {
        let p = params(2, 1, 1, 0.5);
        assert_eq!(
            simulate_scores(&[0.5], p, true).unwrap(),
            vec![Emission { position: 1, flushed: true }]
        );
        // exactly θ later on does not qualify
        assert!(simulate_scores(&[0.1, 0.5], p, true).unwrap().is_empty());
    }

    #[test]
    fn ties_keep_earlier_window() {
        let p = params(10, 1, 2, 0.5);
        let e = simulate_scores(&[0.1, 0.8, 0.8, 0.8], p, true).unwrap();
        assert_eq!(e, vec![Emission { position: 2, flushed: true }]);
    }

    #[test]
    fn hop_skips_positions() {
        let p = params(8, 3, 1, 0.5);
        // evaluated positions: 1, 4, 7
        let mut track = ScoreTrack::new(vec![0.0, 0.99, 0.99, 0.6, 0.99, 0.99, 0.0]).unwrap();
        let mut s = NmsState::new(p).unwrap();
        for _ in 0..track.frame_count(8) {
            s.push((), &mut track).unwrap();
        }
        assert_eq!(s.extractions(), 3);
        assert_eq!(s.best_position(), Some(4));
    }

    #[test]
    fn emission_without_replacement_clears_best() {
        let p = params(3, 1, 1, 0.5);
        // best at 2, position 5 is 3 > 2 away and below θ
        let e = simulate_scores(&[0.0, 0.9, 0.0, 0.0, 0.1, 0.0], p, true).unwrap();
        assert_eq!(e, vec![Emission { position: 2, flushed: false }]);
    }

    #[test]
    fn invalid_params() {
        assert!(NmsState::<()>::new(params(4, 0, 1, 0.5)).is_err());
        assert!(NmsState::<()>::new(params(4, 1, 4, 0.5)).is_err());
        assert!(NmsState::<()>::new(params(4, 1, 1, 1.5)).is_err());
    }
}
