use super::Clip;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const CLIP_FRAMES: usize = 64;
pub const CROP_SIZE: usize = 256;

/// `round(j * (t - 1) / (count - 1))` for `j in 0..count`.
pub fn subsample_indices(t: usize, count: usize) -> Vec<usize> {
    if count == 1 {
        return vec![0];
    }
    (0..count)
        .map(|j| ((j * (t - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect()
}

/// Source coordinate for output index `dst` when scaling an axis by
/// `scale`, with half-pixel centres, clamped to the valid range.
fn source_coord(dst: usize, scale: f64, src_len: usize) -> (usize, usize, f32) {
    let s = ((dst as f64 + 0.5) / scale - 0.5).clamp(0.0, (src_len - 1) as f64);
    let i0 = s.floor() as usize;
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, (s - i0 as f64) as f32)
}

/// Bilinearly resamples a `width x height` plane (column-major in `x`, as
/// stored in clips) to `out_w x out_h`, reading only the window that
/// starts at `(off_x, off_y)` of a virtual `scaled_w x scaled_h` image.
#[allow(clippy::too_many_arguments)]
fn resample_window(
    plane: &[f32],
    w: usize,
    h: usize,
    scaled: (usize, usize),
    off: (usize, usize),
    out_w: usize,
    out_h: usize,
    out: &mut Vec<f32>,
) {
    let sx = scaled.0 as f64 / w as f64;
    let sy = scaled.1 as f64 / h as f64;
    let ys: Vec<_> = (0..out_h).map(|y| source_coord(y + off.1, sy, h)).collect();
    for x in 0..out_w {
        let (x0, x1, fx) = source_coord(x + off.0, sx, w);
        let (c0, c1) = (&plane[x0 * h..(x0 + 1) * h], &plane[x1 * h..(x1 + 1) * h]);
        for &(y0, y1, fy) in &ys {
            let top = c0[y0] + (c1[y0] - c0[y0]) * fx;
            let bottom = c0[y1] + (c1[y1] - c0[y1]) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
}

/// Bilinear resize of a `3 x width x height` frame.
pub fn bilinear_resize(frame: &Tensor, out_w: usize, out_h: usize) -> Result<Tensor> {
    let s = frame.shape();
    if s.len() != 3 || s[1] == 0 || s[2] == 0 || out_w == 0 || out_h == 0 {
        return Err(Error::InvalidInput(format!("cannot resize {s:?} to {out_w}x{out_h}")));
    }
    let (c, w, h) = (s[0], s[1], s[2]);
    let mut out = Vec::with_capacity(c * out_w * out_h);
    for plane in frame.data().chunks(w * h) {
        resample_window(plane, w, h, (out_w, out_h), (0, 0), out_w, out_h, &mut out);
    }
    Tensor::new(vec![c, out_w, out_h], out)
}

/// Subsamples to 64 frames, scales the short side to 256, centre-crops to
/// 256x256 and maps `[0, 255]` to `[-1, 1]`.
pub fn preprocess_clip(raw: &Clip) -> Result<Clip> {
    if raw.is_empty() {
        return Err(Error::EmptyClip);
    }
    if raw.normalized {
        return Err(Error::InvalidInput("clip is already preprocessed".into()));
    }
    let (t, w, h) = (raw.len(), raw.width(), raw.height());
    let short = w.min(h) as f64;
    let scale = CROP_SIZE as f64 / short;
    let scaled = (
        ((w as f64 * scale).round() as usize).max(CROP_SIZE),
        ((h as f64 * scale).round() as usize).max(CROP_SIZE),
    );
    let off = ((scaled.0 - CROP_SIZE) / 2, (scaled.1 - CROP_SIZE) / 2);
    let indices = subsample_indices(t, CLIP_FRAMES);
    let plane = CROP_SIZE * CROP_SIZE;
    let mut data = Vec::with_capacity(3 * CLIP_FRAMES * plane);
    for c in 0..3 {
        for &f in &indices {
            let start = (c * t + f) * w * h;
            resample_window(
                &raw.frames.data()[start..start + w * h],
                w,
                h,
                scaled,
                off,
                CROP_SIZE,
                CROP_SIZE,
                &mut data,
            );
        }
    }
    data.iter_mut().for_each(|v| *v = *v / 127.5 - 1.0);
    Clip::new(
        Tensor::new(vec![3, CLIP_FRAMES, CROP_SIZE, CROP_SIZE], data)?,
        raw.fps * CLIP_FRAMES as f32 / t as f32,
        true,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsample_endpoints_and_repeats() {
        let idx = subsample_indices(128, 64);
        assert_eq!((idx[0], idx[63]), (0, 127));
        assert_eq!(subsample_indices(1, 64), vec![0; 64]);
        let idx = subsample_indices(10, 64);
        assert!(idx.windows(2).all(|p| p[0] <= p[1]) && idx[63] == 9);
    }

    #[test]
    fn bilinear_two_by_two_upscale() {
        // one channel laid out [x][y]: (0,0)=0 (0,1)=2 (1,0)=4 (1,1)=6
        let f = Tensor::new(vec![1, 2, 2], vec![0.0, 2.0, 4.0, 6.0]).unwrap();
        let r = bilinear_resize(&f, 4, 4).unwrap();
        // half-pixel sampling: x=1 -> src 0.25, y=2 -> src 0.75
        let v = r.data()[4 + 2];
        assert!((v - (0.25 * 4.0 + 0.75 * 2.0)).abs() < 1e-6);
        assert_eq!(r.data()[0], 0.0);
        assert_eq!(r.data()[15], 6.0);
    }

    #[test]
    fn constant_clip_maps_endpoints() {
        for (value, expected) in [(255.0, 1.0), (0.0, -1.0)] {
            let raw = Clip::new(Tensor::filled(vec![3, 1, 10, 6], value), 25.0, false).unwrap();
            let out = preprocess_clip(&raw).unwrap();
            assert_eq!(out.frames.shape(), &[3, 64, 256, 256]);
            assert!(out.frames.data().iter().all(|&v| (v - expected).abs() < 1e-6));
        }
    }

    #[test]
    fn single_frame_is_repeated() {
        let data: Vec<f32> = (0..3 * 4 * 4).map(|i| (i * 5 % 256) as f32).collect();
        let raw = Clip::new(Tensor::new(vec![3, 1, 4, 4], data).unwrap(), 25.0, false).unwrap();
        let out = preprocess_clip(&raw).unwrap();
        let first = out.frame(0);
        assert!((1..64).all(|f| out.frame(f) == first));
    }

    #[test]
    fn rejects_normalized_input() {
        let c = Clip::new(Tensor::zeros(vec![3, 1, 2, 2]), 25.0, true).unwrap();
        assert!(preprocess_clip(&c).is_err());
    }
}
