use std::path::{Path, PathBuf};

use super::{check_window_len, ConfidenceVector, FeatureExtractor, FeatureVector};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit(bits: u64) -> f32 {
    // top 24 bits -> [0, 1)
    (bits >> 40) as f32 / (1u64 << 24) as f32
}

/// Synthesizes features in `[-1, 1)` and confidences in `[0, 1)` from a hash
/// of `(seed, position)`. Frames are ignored.
#[derive(Debug, Clone)]
pub struct MockExtractor {
    pub seed: u64,
    pub feature_dim: usize,
    pub classes: usize,
    pub window_len: Option<usize>,
}

impl MockExtractor {
    pub fn new(seed: u64, feature_dim: usize, classes: usize) -> Self {
        Self {
            seed,
            feature_dim,
            classes,
            window_len: None,
        }
    }

    pub fn with_window_len(mut self, w: usize) -> Self {
        self.window_len = Some(w);
        self
    }

    pub fn sample(&self, position: usize) -> (FeatureVector, ConfidenceVector) {
        let base = mix64(self.seed ^ mix64(position as u64));
        let mut counter = 0u64;
        let mut next = || {
            counter += 1;
            mix64(base.wrapping_add(counter.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
        };
        let features = (0..self.feature_dim).map(|_| 2.0 * unit(next()) - 1.0).collect();
        let conf = (0..self.classes).map(|_| unit(next())).collect();
        (
            FeatureVector::new(features),
            ConfidenceVector::new(conf).expect("unit values lie in [0, 1)"),
        )
    }
}

impl<F> FeatureExtractor<F> for MockExtractor {
    fn extract(&mut self, window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        check_window_len(self.window_len, window.len())?;
        Ok(self.sample(position))
    }
}

/// Replays a fixed list of outputs in query order.
#[derive(Debug, Clone)]
pub struct ScriptedExtractor {
    entries: Vec<(FeatureVector, ConfidenceVector)>,
    cursor: usize,
    pub window_len: Option<usize>,
}

impl ScriptedExtractor {
    pub fn new(entries: Vec<(FeatureVector, ConfidenceVector)>) -> Self {
        Self {
            entries,
            cursor: 0,
            window_len: None,
        }
    }

    pub fn with_window_len(mut self, w: usize) -> Self {
        self.window_len = Some(w);
        self
    }

    pub fn remaining(&self) -> usize {
        self.entries.len() - self.cursor
    }

    pub fn rewind(&mut self) {
        self.cursor = 0;
    }
}

impl<F> FeatureExtractor<F> for ScriptedExtractor {
    fn extract(&mut self, window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        check_window_len(self.window_len, window.len())?;
        let entry = self
            .entries
            .get(self.cursor)
            .cloned()
            .ok_or(Error::MissingWindow(position))?;
        self.cursor += 1;
        Ok(entry)
    }
}

/// Reads `{dir}/win_%06d.phi.isvt` and `{dir}/win_%06d.conf.isvt` for each
/// queried window position.
#[derive(Debug, Clone)]
pub struct FileBackedExtractor {
    dir: PathBuf,
    pub window_len: Option<usize>,
}

impl FileBackedExtractor {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            window_len: None,
        }
    }

    pub fn with_window_len(mut self, w: usize) -> Self {
        self.window_len = Some(w);
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn feature_path(&self, position: usize) -> PathBuf {
        self.dir.join(format!("win_{position:06}.phi.isvt"))
    }

    pub fn confidence_path(&self, position: usize) -> PathBuf {
        self.dir.join(format!("win_{position:06}.conf.isvt"))
    }

    /// Writes one entry in the layout `extract` reads.
    pub fn store(
        dir: impl AsRef<Path>,
        position: usize,
        features: &FeatureVector,
        confidences: &ConfidenceVector,
    ) -> Result<()> {
        let this = Self::new(dir.as_ref());
        features.0.write(this.feature_path(position))?;
        confidences.0.write(this.confidence_path(position))
    }

    /// Highest position `p` such that every window `1..=p` has both files.
    pub fn contiguous_len(&self) -> usize {
        let mut p = 0;
        while self.feature_path(p + 1).exists() && self.confidence_path(p + 1).exists() {
            p += 1;
        }
        p
    }
}

impl FileBackedExtractor {
    /// Largest position with a stored feature file, if any. Positions
    /// skipped by a hop larger than 1 may be absent below it.
    pub fn last_position(&self) -> Result<Option<usize>> {
        let entries = std::fs::read_dir(&self.dir).map_err(|e| Error::io(&self.dir, e))?;
        Ok(entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name();
                let name = name.to_str()?;
                name.strip_prefix("win_")?.strip_suffix(".phi.isvt")?.parse().ok()
            })
            .max())
    }
}

impl<F> FeatureExtractor<F> for FileBackedExtractor {
    fn extract(&mut self, window: &[F], position: usize) -> Result<(FeatureVector, ConfidenceVector)> {
        check_window_len(self.window_len, window.len())?;
        let (phi, conf) = (self.feature_path(position), self.confidence_path(position));
        if !phi.exists() || !conf.exists() {
            return Err(Error::MissingWindow(position));
        }
        let features = Tensor::read(phi)?;
        let conf = Tensor::read(conf)?;
        Ok((
            FeatureVector::new(features.into_data()),
            ConfidenceVector::new(conf.into_data())?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_is_deterministic() {
        let mut a = MockExtractor::new(7, 16, 5);
        let mut b = MockExtractor::new(7, 16, 5);
        let frames: [(); 0] = [];
        let x = a.extract(&frames, 3).unwrap();
        assert_eq!(x, a.extract(&frames, 3).unwrap());
        assert_eq!(x, b.extract(&frames, 3).unwrap());
        assert_ne!(x, a.extract(&frames, 4).unwrap());
        assert_ne!(x, MockExtractor::new(8, 16, 5).extract(&frames, 3).unwrap());
        assert!(x.0.values().iter().all(|v| (-1.0..1.0).contains(v)));
    }

    #[test]
    fn mock_checks_window_length() {
        let mut m = MockExtractor::new(1, 4, 2).with_window_len(3);
        assert!(matches!(
            m.extract(&[(), ()], 1),
            Err(Error::WrongWindowLength { expected: 3, found: 2 })
        ));
        assert!(m.extract(&[(), (), ()], 1).is_ok());
    }

    #[test]
    fn scripted_replays_in_order() {
        let e0 = (FeatureVector::new(vec![0.0]), ConfidenceVector::new(vec![0.1]).unwrap());
        let e1 = (FeatureVector::new(vec![1.0]), ConfidenceVector::new(vec![0.9]).unwrap());
        let mut s = ScriptedExtractor::new(vec![e0.clone(), e1.clone()]);
        let w = [(); 4];
        assert_eq!(s.extract(&w, 1).unwrap(), e0);
        assert_eq!(s.extract(&w, 2).unwrap(), e1);
        assert!(matches!(s.extract(&w, 3), Err(Error::MissingWindow(3))));
    }

    #[test]
    fn file_backed_reads_layout() {
        let dir = tempfile::tempdir().unwrap();
        let f = FeatureVector::new(vec![1.0, 2.0]);
        let c = ConfidenceVector::new(vec![0.2, 0.8]).unwrap();
        FileBackedExtractor::store(dir.path(), 1, &f, &c).unwrap();
        assert!(dir.path().join("win_000001.phi.isvt").exists());
        assert!(dir.path().join("win_000001.conf.isvt").exists());
        let mut e = FileBackedExtractor::new(dir.path());
        assert_eq!(e.contiguous_len(), 1);
        FileBackedExtractor::store(dir.path(), 4, &f, &c).unwrap();
        assert_eq!(e.last_position().unwrap(), Some(4));
        assert_eq!(e.extract(&[(); 1], 1).unwrap(), (f, c));
        assert!(matches!(e.extract(&[(); 1], 2), Err(Error::MissingWindow(2))));
    }
}
