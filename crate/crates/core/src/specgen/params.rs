use serde::{Deserialize, Serialize};

use super::layers::ConvGeom;
use crate::error::{Error, Result};

/// One transposed-convolution block: `[height, width]` kernel, stride and padding.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeconvSpec {
    pub out_channels: usize,
    pub kernel: [usize; 2],
    pub stride: [usize; 2],
    pub padding: [usize; 2],
}

/// Architecture of the feature-to-spectrogram generator.
///
/// MLP stages widen the feature vector to `mlp_dims`, the last stage is
/// reshaped to `reshape = [channels, height, width]`, and each of the two
/// branches runs `blocks` followed by a 3x3 stride-1 output convolution down
/// to one channel. The natural output is centre-cropped or zero-padded to
/// `output_bins x output_frames`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub input_dim: usize,
    pub mlp_dims: Vec<usize>,
    pub reshape: [usize; 3],
    pub blocks: Vec<DeconvSpec>,
    pub output_bins: usize,
    pub output_frames: usize,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub norm_eps: f64,
}

pub(crate) const OUTPUT_KERNEL: [usize; 2] = [3, 3];

/// Picks, per axis, the smallest stride `r` (kernel `r + 1`, no padding) so
/// that `blocks` upsamplings of `start` reach at least `target`.
fn plan_axis(start: usize, target: usize, blocks: usize) -> usize {
    let reach = |r: usize| (0..blocks).fold(start, |s, _| s * r + 1);
    let mut r = 1;
    while reach(r) < target {
        r += 1;
    }
    r
}

impl GeneratorParams {
    /// Builds a block schedule for the given channel sequence (excluding the
    /// reshape channels) whose natural output covers `bins x frames`.
    pub fn planned(
        input_dim: usize,
        mlp_dims: Vec<usize>,
        reshape: [usize; 3],
        channels: &[usize],
        output_bins: usize,
        output_frames: usize,
    ) -> Self {
        let rh = plan_axis(reshape[1], output_bins, channels.len());
        let rw = plan_axis(reshape[2], output_frames, channels.len());
        let blocks = channels
            .iter()
            .map(|&c| DeconvSpec {
                out_channels: c,
                kernel: [rh + 1, rw + 1],
                stride: [rh, rw],
                padding: [0, 0],
            })
            .collect();
        Self {
            input_dim,
            mlp_dims,
            reshape,
            blocks,
            output_bins,
            output_frames,
            dropout: 0.1,
            leaky_slope: 0.01,
            norm_eps: 1e-5,
        }
    }

    /// Full-size architecture: 2048-d features, MLP to 5184 = 64x9x9,
    /// channels halved 64 -> 8, output 1025x100.
    pub fn full_scale() -> Self {
        Self::planned(2048, vec![648, 1296, 2592, 5184], [64, 9, 9], &[32, 16, 8], 1025, 100)
    }

    /// A small architecture for tests and demos: MLP `[2n, 32]`, reshape
    /// 8x2x2, channels 8 -> 4 -> 2 -> 1.
    pub fn toy(input_dim: usize, output_bins: usize, output_frames: usize) -> Self {
        Self::planned(input_dim, vec![2 * input_dim, 32], [8, 2, 2], &[4, 2], output_bins, output_frames)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.input_dim == 0 {
            return bad("generator input_dim must be positive".into());
        }
        if self.mlp_dims.is_empty() || self.mlp_dims.contains(&0) {
            return bad("mlp_dims must be nonempty and positive".into());
        }
        if self.reshape.contains(&0) {
            return bad("reshape dims must be positive".into());
        }
        let prod: usize = self.reshape.iter().product();
        if Some(&prod) != self.mlp_dims.last() {
            return bad(format!(
                "reshape {:?} holds {prod} values but the last MLP stage has {}",
                self.reshape,
                self.mlp_dims.last().unwrap()
            ));
        }
        let (mut h, mut w) = (self.reshape[1], self.reshape[2]);
        for (i, b) in self.blocks.iter().enumerate() {
            if b.out_channels == 0 || b.kernel.contains(&0) || b.stride.contains(&0) {
                return bad(format!("deconv block {i} has a zero channel, kernel or stride"));
            }
            let nh = (h - 1) * b.stride[0] + b.kernel[0];
            let nw = (w - 1) * b.stride[1] + b.kernel[1];
            if nh <= 2 * b.padding[0] || nw <= 2 * b.padding[1] {
                return bad(format!("deconv block {i} padding leaves an empty output"));
            }
            h = nh - 2 * b.padding[0];
            w = nw - 2 * b.padding[1];
        }
        if self.output_bins == 0 || self.output_frames == 0 {
            return bad("output dims must be positive".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !self.leaky_slope.is_finite() || !(self.norm_eps > 0.0) {
            return bad("leaky_slope must be finite and norm_eps positive".into());
        }
        Ok(())
    }

    /// Height and width of a branch before the crop/pad step.
    pub fn natural_output(&self) -> (usize, usize) {
        let out = self.output_geom();
        (out.out_h(), out.out_w())
    }

    pub(crate) fn block_geoms(&self) -> Vec<ConvGeom> {
        let [mut c, mut h, mut w] = self.reshape;
        self.blocks
            .iter()
            .map(|b| {
                let g = ConvGeom {
                    in_ch: c,
                    out_ch: b.out_channels,
                    in_h: h,
                    in_w: w,
                    kernel: b.kernel,
                    stride: b.stride,
                    padding: b.padding,
                };
                (c, h, w) = (b.out_channels, g.out_h(), g.out_w());
                g
            })
            .collect()
    }

    pub(crate) fn output_geom(&self) -> ConvGeom {
        let (in_ch, in_h, in_w) = match self.block_geoms().last() {
            Some(g) => (g.out_ch, g.out_h(), g.out_w()),
            None => (self.reshape[0], self.reshape[1], self.reshape[2]),
        };
        ConvGeom {
            in_ch,
            out_ch: 1,
            in_h,
            in_w,
            kernel: OUTPUT_KERNEL,
            stride: [1, 1],
            padding: [1, 1],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_shapes() {
        let p = GeneratorParams::full_scale();
        p.validate().unwrap();
        assert_eq!(p.reshape.iter().product::<usize>(), 5184);
        let (h, w) = p.natural_output();
        assert!(h >= 1025 && w >= 100, "{h}x{w}");
        let ch: Vec<usize> = p.blocks.iter().map(|b| b.out_channels).collect();
        assert_eq!(ch, [32, 16, 8]);
    }

    #[test]
    fn toy_covers_target() {
        for (n, b, f) in [(32, 33, 10), (8, 9, 4), (4, 1, 1), (16, 129, 40)] {
            let p = GeneratorParams::toy(n, b, f);
            p.validate().unwrap();
            let (h, w) = p.natural_output();
            assert!(h >= b && w >= f);
        }
    }

    #[test]
    fn rejects_inconsistent_reshape() {
        let mut p = GeneratorParams::toy(8, 9, 4);
        p.reshape = [8, 3, 3];
        assert!(p.validate().is_err());
        let mut p = GeneratorParams::toy(8, 9, 4);
        p.mlp_dims.clear();
        assert!(p.validate().is_err());
        let mut p = GeneratorParams::toy(8, 9, 4);
        p.dropout = 1.0;
        assert!(p.validate().is_err());
    }
}
