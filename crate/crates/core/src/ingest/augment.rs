use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::preprocess::preprocess_clip;
use super::Clip;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Colour jitter, rotation and frame-drop settings.
///
/// Brightness, contrast and saturation factors `f` are drawn uniformly from
/// `[max(0, 1 - jitter), 1 + jitter]`; the hue shift from `[-hue, hue]`
/// turns of the colour wheel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentParams {
    pub brightness: f64,
    pub contrast: f64,
    pub saturation: f64,
    pub hue: f64,
    pub max_rotation_deg: f64,
    pub max_drop_fraction: f64,
    pub versions: usize,
    pub seed: u64,
}

impl Default for AugmentParams {
    fn default() -> Self {
        Self {
            brightness: 0.6,
            contrast: 0.6,
            saturation: 0.6,
            hue: 0.2,
            max_rotation_deg: 15.0,
            max_drop_fraction: 0.125,
            versions: 5,
            seed: 0,
        }
    }
}

impl AugmentParams {
    /// Parameters under which augmentation is the identity.
    pub fn identity(seed: u64) -> Self {
        Self {
            brightness: 0.0,
            contrast: 0.0,
            saturation: 0.0,
            hue: 0.0,
            max_rotation_deg: 0.0,
            max_drop_fraction: 0.0,
            versions: 1,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let factors = [
            self.brightness,
            self.contrast,
            self.saturation,
            self.hue,
            self.max_rotation_deg,
            self.max_drop_fraction,
        ];
        if factors.iter().any(|f| !(*f >= 0.0) || !f.is_finite()) {
            return Err(Error::InvalidConfig("augmentation factors must be finite and >= 0".into()));
        }
        if self.hue > 0.5 {
            return Err(Error::InvalidConfig(format!("hue factor {} exceeds 0.5", self.hue)));
        }
        if self.max_drop_fraction > 0.125 {
            return Err(Error::InvalidConfig(format!(
                "drop fraction {} exceeds 1/8",
                self.max_drop_fraction
            )));
        }
        if self.versions == 0 {
            return Err(Error::InvalidConfig("versions must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
struct Draw {
    brightness: Option<f32>,
    contrast: Option<f32>,
    saturation: Option<f32>,
    hue: Option<f32>,
    angle_rad: Option<f64>,
}

fn factor(rng: &mut ChaCha8Rng, jitter: f64) -> Option<f32> {
    let f = rng.gen_range((1.0 - jitter).max(0.0)..=1.0 + jitter) as f32;
    (jitter > 0.0).then_some(f)
}

fn gray(r: f32, g: f32, b: f32) -> f32 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Applies the colour operations to one frame given as three planes of
/// intensities in `[0, 1]`.
fn jitter_frame(rgb: &mut [Vec<f32>; 3], d: &Draw) {
    let n = rgb[0].len();
    let clamp = |v: f32| v.clamp(0.0, 1.0);
    if let Some(b) = d.brightness {
        rgb.iter_mut().flatten().for_each(|v| *v = clamp(*v * b));
    }
    if let Some(c) = d.contrast {
        let mean = (0..n).map(|i| gray(rgb[0][i], rgb[1][i], rgb[2][i])).sum::<f32>() / n as f32;
        rgb.iter_mut().flatten().for_each(|v| *v = clamp(c * *v + (1.0 - c) * mean));
    }
    if let Some(s) = d.saturation {
        for i in 0..n {
            let g = gray(rgb[0][i], rgb[1][i], rgb[2][i]);
            for p in rgb.iter_mut() {
                p[i] = clamp(s * p[i] + (1.0 - s) * g);
            }
        }
    }
    if let Some(h) = d.hue {
        // Linear hue approximation: rotate the chroma (I, Q) plane of YIQ by
        // 2*pi*h while keeping luma Y fixed, then clamp back to [0, 1].
        let (sin, cos) = (2.0 * std::f32::consts::PI * h).sin_cos();
        for i in 0..n {
            let (r, g, b) = (rgb[0][i], rgb[1][i], rgb[2][i]);
            let y = 0.299 * r + 0.587 * g + 0.114 * b;
            let ci = 0.596 * r - 0.274 * g - 0.322 * b;
            let cq = 0.211 * r - 0.523 * g + 0.312 * b;
            let (ri, rq) = (ci * cos - cq * sin, ci * sin + cq * cos);
            rgb[0][i] = clamp(y + 0.956 * ri + 0.621 * rq);
            rgb[1][i] = clamp(y - 0.272 * ri - 0.647 * rq);
            rgb[2][i] = clamp(y - 1.106 * ri + 1.703 * rq);
        }
    }
}

/// Rotates a `width x height` plane about its centre by `angle` radians,
/// sampling bilinearly and filling uncovered pixels with `fill`.
fn rotate_plane(plane: &[f32], w: usize, h: usize, angle: f64, fill: f32) -> Vec<f32> {
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (sin, cos) = angle.sin_cos();
    let mut out = vec![fill; w * h];
    for x in 0..w {
        for y in 0..h {
            let (dx, dy) = (x as f64 - cx, y as f64 - cy);
            // inverse rotation maps the output pixel to its source
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            if sx < -1e-9 || sy < -1e-9 || sx > w as f64 - 1.0 + 1e-9 || sy > h as f64 - 1.0 + 1e-9 {
                continue;
            }
            let sx = sx.clamp(0.0, w as f64 - 1.0);
            let sy = sy.clamp(0.0, h as f64 - 1.0);
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = ((sx - x0 as f64) as f32, (sy - y0 as f64) as f32);
            let at = |x: usize, y: usize| plane[x * h + y];
            let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
            let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
            out[x * h + y] = top + (bottom - top) * fy;
        }
    }
    out
}

type UnitMap = fn(f32) -> f32;

/// Produces augmented version `version` of `clip`, deterministically from
/// `(params.seed, version)`.
///
/// One set of colour factors and one rotation angle apply to every frame;
/// then up to `floor(t * max_drop_fraction)` frames are removed. Operations
/// whose range is zero are skipped, so identity parameters return the input
/// unchanged. Rotation fills uncovered corners with black.
pub fn augment_clip(clip: &Clip, params: &AugmentParams, version: usize) -> Result<Clip> {
    params.validate()?;
    if version >= params.versions {
        return Err(Error::InvalidInput(format!(
            "version {version} out of range for {} versions",
            params.versions
        )));
    }
    if clip.is_empty() {
        return Err(Error::EmptyClip);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(version as u64);
    let draw = Draw {
        brightness: factor(&mut rng, params.brightness),
        contrast: factor(&mut rng, params.contrast),
        saturation: factor(&mut rng, params.saturation),
        hue: {
            let h = rng.gen_range(-params.hue..=params.hue) as f32;
            (params.hue > 0.0).then_some(h)
        },
        angle_rad: {
            let r = params.max_rotation_deg;
            let a = rng.gen_range(-r..=r).to_radians();
            (r > 0.0).then_some(a)
        },
    };
    let t = clip.len();
    let max_drop = (t as f64 * params.max_drop_fraction).floor() as usize;
    let drop_count = rng.gen_range(0..=max_drop);
    let mut dropped = vec![false; t];
    for i in sample(&mut rng, t, drop_count).iter() {
        dropped[i] = true;
    }

    let (w, h) = (clip.width(), clip.height());
    let (to_unit, from_unit): (UnitMap, UnitMap) = if clip.normalized {
        (|v| (v + 1.0) / 2.0, |v| v * 2.0 - 1.0)
    } else {
        (|v| v / 255.0, |v| v * 255.0)
    };
    let black = if clip.normalized { -1.0 } else { 0.0 };
    let colour = draw.brightness.is_some() || draw.contrast.is_some() || draw.saturation.is_some() || draw.hue.is_some();

    let mut frames = Vec::with_capacity(t - drop_count);
    for f in (0..t).filter(|&f| !dropped[f]) {
        let frame = clip.frame(f);
        if !colour && draw.angle_rad.is_none() {
            frames.push(frame);
            continue;
        }
        let mut planes: [Vec<f32>; 3] = std::array::from_fn(|c| frame.data()[c * w * h..(c + 1) * w * h].to_vec());
        if colour {
            planes.iter_mut().flatten().for_each(|v| *v = to_unit(*v));
            jitter_frame(&mut planes, &draw);
            planes.iter_mut().flatten().for_each(|v| *v = from_unit(*v));
        }
        if let Some(angle) = draw.angle_rad {
            for p in planes.iter_mut() {
                *p = rotate_plane(p, w, h, angle, black);
            }
        }
        frames.push(Tensor::new(vec![3, w, h], planes.concat())?);
    }
    Clip::from_frames(&frames, clip.fps, clip.normalized)
}

/// Augments the raw clip, then preprocesses it.
pub fn augment_then_preprocess(raw: &Clip, params: &AugmentParams, version: usize) -> Result<Clip> {
    preprocess_clip(&augment_clip(raw, params, version)?)
}

/// Preprocesses the raw clip, then augments the 64-frame result.
pub fn preprocess_then_augment(raw: &Clip, params: &AugmentParams, version: usize) -> Result<Clip> {
    augment_clip(&preprocess_clip(raw)?, params, version)
}
