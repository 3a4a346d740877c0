//! Forward and backward kernels for the generator's building blocks.
//! Feature maps are `channels x height x width`, row-major.

use crate::scalar::Scalar;

pub(crate) fn linear<T: Scalar>(weight: &[T], bias: &[T], x: &[T]) -> Vec<T> {
    let d = x.len();
    bias.iter()
        .enumerate()
        .map(|(j, &b)| {
            weight[j * d..(j + 1) * d]
                .iter()
                .zip(x)
                .map(|(&w, &v)| w * v)
                .sum::<T>()
                + b
        })
        .collect()
}

/// Accumulates weight/bias gradients and returns the input gradient.
pub(crate) fn linear_backward<T: Scalar>(
    weight: &[T],
    x: &[T],
    grad_out: &[T],
    grad_weight: &mut [T],
    grad_bias: &mut [T],
) -> Vec<T> {
    let d = x.len();
    let mut gx = vec![T::zero(); d];
    for (j, &g) in grad_out.iter().enumerate() {
        grad_bias[j] += g;
        let row = &weight[j * d..(j + 1) * d];
        let grow = &mut grad_weight[j * d..(j + 1) * d];
        for i in 0..d {
            grow[i] += g * x[i];
            gx[i] += g * row[i];
        }
    }
    gx
}

/// Normalizes `x` to zero mean and unit (biased) variance.
/// Returns `(xhat, 1/sqrt(var + eps))`.
pub(crate) fn normalize<T: Scalar>(x: &[T], eps: T) -> (Vec<T>, T) {
    let n = T::c(x.len() as f64);
    let mean = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let inv_std = T::one() / (var + eps).sqrt();
    (x.iter().map(|&v| (v - mean) * inv_std).collect(), inv_std)
}

/// Backward of [`normalize`] given the gradient on `xhat`.
pub(crate) fn normalize_backward<T: Scalar>(xhat: &[T], inv_std: T, grad_xhat: &[T]) -> Vec<T> {
    let n = T::c(xhat.len() as f64);
    let sum_g = grad_xhat.iter().copied().sum::<T>();
    let sum_gx = grad_xhat.iter().zip(xhat).map(|(&g, &x)| g * x).sum::<T>();
    grad_xhat
        .iter()
        .zip(xhat)
        .map(|(&g, &x)| inv_std * (g - sum_g / n - x * sum_gx / n))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeom {
    pub in_ch: usize,
    pub out_ch: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub kernel: [usize; 2],
    pub stride: [usize; 2],
    pub padding: [usize; 2],
}

impl ConvGeom {
    pub fn out_h(&self) -> usize {
        (self.in_h - 1) * self.stride[0] + self.kernel[0] - 2 * self.padding[0]
    }

    pub fn out_w(&self) -> usize {
        (self.in_w - 1) * self.stride[1] + self.kernel[1] - 2 * self.padding[1]
    }

    /// Calls `f(input_index, kernel_index, output_index)` for every
    /// contributing triple of the transposed convolution.
    #[inline]
    fn for_each(&self, mut f: impl FnMut(usize, usize, usize)) {
        let (oh, ow) = (self.out_h() as isize, self.out_w() as isize);
        let [kh, kw] = self.kernel;
        for ci in 0..self.in_ch {
            for iy in 0..self.in_h {
                for ix in 0..self.in_w {
                    let x_idx = (ci * self.in_h + iy) * self.in_w + ix;
                    for co in 0..self.out_ch {
                        let k_base = (ci * self.out_ch + co) * kh * kw;
                        for ky in 0..kh {
                            let oy = (iy * self.stride[0] + ky) as isize - self.padding[0] as isize;
                            if oy < 0 || oy >= oh {
                                continue;
                            }
                            let o_row = (co * oh as usize + oy as usize) * ow as usize;
                            for kx in 0..kw {
                                let ox = (ix * self.stride[1] + kx) as isize - self.padding[1] as isize;
                                if ox < 0 || ox >= ow {
                                    continue;
                                }
                                f(x_idx, k_base + ky * kw + kx, o_row + ox as usize);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Transposed convolution; kernel layout `in_ch x out_ch x kh x kw`.
pub(crate) fn conv_transpose<T: Scalar>(g: &ConvGeom, x: &[T], kernel: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); g.out_ch * g.out_h() * g.out_w()];
    g.for_each(|xi, ki, oi| out[oi] += x[xi] * kernel[ki]);
    out
}

/// Accumulates the kernel gradient and returns the input gradient.
pub(crate) fn conv_transpose_backward<T: Scalar>(
    g: &ConvGeom,
    x: &[T],
    kernel: &[T],
    grad_out: &[T],
    grad_kernel: &mut [T],
) -> Vec<T> {
    let mut gx = vec![T::zero(); x.len()];
    g.for_each(|xi, ki, oi| {
        gx[xi] += kernel[ki] * grad_out[oi];
        grad_kernel[ki] += x[xi] * grad_out[oi];
    });
    gx
}

/// Offset mapping output row `i` to source row `i + offset` when centring a
/// `natural`-long axis into `target` (crop when larger, zero-pad when smaller).
pub(crate) fn centre_offset(natural: usize, target: usize) -> isize {
    if natural >= target {
        ((natural - target) / 2) as isize
    } else {
        -(((target - natural) / 2) as isize)
    }
}

pub(crate) fn crop_or_pad<T: Scalar>(x: &[T], nat: (usize, usize), target: (usize, usize)) -> Vec<T> {
    let (oy, ox) = (centre_offset(nat.0, target.0), centre_offset(nat.1, target.1));
    let mut out = vec![T::zero(); target.0 * target.1];
    for i in 0..target.0 {
        let si = i as isize + oy;
        if si < 0 || si >= nat.0 as isize {
            continue;
        }
        for j in 0..target.1 {
            let sj = j as isize + ox;
            if sj < 0 || sj >= nat.1 as isize {
                continue;
            }
            out[i * target.1 + j] = x[si as usize * nat.1 + sj as usize];
        }
    }
    out
}

pub(crate) fn crop_or_pad_backward<T: Scalar>(
    grad: &[T],
    nat: (usize, usize),
    target: (usize, usize),
) -> Vec<T> {
    let (oy, ox) = (centre_offset(nat.0, target.0), centre_offset(nat.1, target.1));
    let mut out = vec![T::zero(); nat.0 * nat.1];
    for i in 0..target.0 {
        let si = i as isize + oy;
        if si < 0 || si >= nat.0 as isize {
            continue;
        }
        for j in 0..target.1 {
            let sj = j as isize + ox;
            if sj < 0 || sj >= nat.1 as isize {
                continue;
            }
            out[si as usize * nat.1 + sj as usize] += grad[i * target.1 + j];
        }
    }
    out
}
