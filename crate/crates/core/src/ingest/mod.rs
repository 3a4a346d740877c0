//! Video clips: PPM frame directories, preprocessing to the model's input
//! geometry, and seeded training-time augmentation.

mod augment;
mod ppm;
mod preprocess;

pub use augment::{augment_clip, augment_then_preprocess, preprocess_then_augment, AugmentParams};
pub use ppm::{read_ppm, write_ppm, PpmImage};
pub use preprocess::{bilinear_resize, preprocess_clip, subsample_indices, CLIP_FRAMES, CROP_SIZE};

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A colour clip stored as `3 x frames x width x height`.
///
/// Raw clips hold pixel values in `[0, 255]`; preprocessed clips hold
/// values in `[-1, 1]` and have `normalized` set.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    pub frames: Tensor,
    pub fps: f32,
    pub normalized: bool,
}

impl Clip {
    pub fn new(frames: Tensor, fps: f32, normalized: bool) -> Result<Self> {
        let s = frames.shape();
        if s.len() != 4 || s[0] != 3 {
            return Err(Error::InvalidShape {
                shape: s.to_vec(),
                len: frames.len(),
            });
        }
        Ok(Self {
            frames,
            fps,
            normalized,
        })
    }

    /// Builds a clip from per-frame tensors of shape `3 x width x height`.
    pub fn from_frames(frames: &[Tensor], fps: f32, normalized: bool) -> Result<Self> {
        let first = frames.first().ok_or(Error::EmptyClip)?;
        let fs = first.shape().to_vec();
        if fs.len() != 3 || fs[0] != 3 {
            return Err(Error::InvalidShape {
                shape: fs,
                len: first.len(),
            });
        }
        let (w, h) = (fs[1], fs[2]);
        let t = frames.len();
        let mut data = vec![0.0f32; 3 * t * w * h];
        for (f, frame) in frames.iter().enumerate() {
            if frame.shape() != fs.as_slice() {
                return Err(Error::DimensionMismatch(format!(
                    "frame {f} has shape {:?}, expected {fs:?}",
                    frame.shape()
                )));
            }
            for c in 0..3 {
                let dst = (c * t + f) * w * h;
                data[dst..dst + w * h].copy_from_slice(&frame.data()[c * w * h..(c + 1) * w * h]);
            }
        }
        Self::new(Tensor::new(vec![3, t, w, h], data)?, fps, normalized)
    }

    pub fn len(&self) -> usize {
        self.frames.shape()[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> usize {
        self.frames.shape()[2]
    }

    pub fn height(&self) -> usize {
        self.frames.shape()[3]
    }

    /// Value of channel `c`, frame `f`, column `x`, row `y`.
    pub fn pixel(&self, c: usize, f: usize, x: usize, y: usize) -> f32 {
        let (t, w, h) = (self.len(), self.width(), self.height());
        self.frames.data()[((c * t + f) * w + x) * h + y]
    }

    /// Frame `f` as a `3 x width x height` tensor.
    pub fn frame(&self, f: usize) -> Tensor {
        let (t, wh) = (self.len(), self.width() * self.height());
        let mut data = Vec::with_capacity(3 * wh);
        for c in 0..3 {
            let start = (c * t + f) * wh;
            data.extend_from_slice(&self.frames.data()[start..start + wh]);
        }
        Tensor::new(vec![3, self.width(), self.height()], data).expect("frame shape")
    }

    pub fn frame_list(&self) -> Vec<Tensor> {
        (0..self.len()).map(|f| self.frame(f)).collect()
    }

    /// Reads `frame_*.ppm` files from `dir` in lexicographic order.
    pub fn read_dir(dir: impl AsRef<Path>, fps: f32) -> Result<Self> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("frame_") && n.ends_with(".ppm"))
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            return Err(Error::EmptyClip);
        }
        let frames = paths
            .iter()
            .map(|p| read_ppm(p).map(|img| img.to_tensor()))
            .collect::<Result<Vec<_>>>()?;
        Self::from_frames(&frames, fps, false)
    }

    /// Writes each frame as `frame_%06d.ppm`, mapping normalized values back
    /// to `[0, 255]`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for f in 0..self.len() {
            let mut frame = self.frame(f);
            if self.normalized {
                frame = frame.map(|v| (v + 1.0) * 127.5);
            }
            write_ppm(dir.join(format!("frame_{f:06}.ppm")), &PpmImage::from_tensor(&frame)?)?;
        }
        Ok(())
    }
}
