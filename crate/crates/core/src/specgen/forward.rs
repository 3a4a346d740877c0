use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    conv_transpose, conv_transpose_backward, crop_or_pad, crop_or_pad_backward, linear,
    linear_backward, normalize, normalize_backward, ConvGeom,
};
use super::weights::{Branch, GeneratorWeights};
use crate::dsp::StftConfig;
use crate::error::{Error, Result};
use crate::extractor::FeatureVector;
use crate::scalar::Scalar;
use crate::spectrogram::ComplexSpectrogram;
use crate::tensor::Tensor;

/// Whether dropout is active. Training masks are drawn from a ChaCha8
/// stream seeded by `seed`, so a given seed always drops the same units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    Train { seed: u64 },
}

/// Real and imaginary planes, each `bins x frames` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorOutput<T> {
    pub real: Vec<T>,
    pub imag: Vec<T>,
    pub bins: usize,
    pub frames: usize,
}

#[derive(Debug, Clone)]
struct StageTrace<T> {
    input: Vec<T>,
    xhat: Vec<T>,
    inv_std: T,
    normed: Vec<T>,
    mask: Option<Vec<T>>,
}

#[derive(Debug, Clone)]
struct BlockTrace<T> {
    input: Vec<T>,
    xhat: Vec<T>,
    inv_std: Vec<T>,
    normed: Vec<T>,
    mask: Option<Vec<T>>,
}

#[derive(Debug, Clone)]
struct BranchTrace<T> {
    blocks: Vec<BlockTrace<T>>,
    out_input: Vec<T>,
}

/// Intermediate activations of one forward pass, consumed by `backward`.
#[derive(Debug, Clone)]
pub struct GeneratorTrace<T> {
    stages: Vec<StageTrace<T>>,
    real: BranchTrace<T>,
    imag: BranchTrace<T>,
}

fn dropout_mask<T: Scalar>(rng: &mut Option<ChaCha8Rng>, p: f64, len: usize) -> Option<Vec<T>> {
    let rng = rng.as_mut()?;
    if p == 0.0 {
        return None;
    }
    let keep = T::c(1.0 / (1.0 - p));
    Some(
        (0..len)
            .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
            .collect(),
    )
}

fn apply_mask<T: Scalar>(x: &mut [T], mask: &Option<Vec<T>>) {
    if let Some(m) = mask {
        x.iter_mut().zip(m).for_each(|(v, &k)| *v *= k);
    }
}

impl<T: Scalar> GeneratorWeights<T> {
    /// Runs the generator on `features` and keeps the activations needed
    /// for [`GeneratorWeights::backward`].
    pub fn forward_traced(&self, features: &[T], mode: Mode) -> Result<(GeneratorOutput<T>, GeneratorTrace<T>)> {
        let p = &self.params;
        if features.len() != p.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "feature vector has {} values, generator expects {}",
                features.len(),
                p.input_dim
            )));
        }
        let mut rng = match mode {
            Mode::Eval => None,
            Mode::Train { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        };
        let eps = T::c(p.norm_eps);
        let slope = T::c(p.leaky_slope);

        let mut x = features.to_vec();
        let mut stages = Vec::with_capacity(self.mlp.len());
        for s in &self.mlp {
            let z = linear(&s.weight, &s.bias, &x);
            let (xhat, inv_std) = normalize(&z, eps);
            let normed: Vec<T> = xhat
                .iter()
                .zip(&s.norm_gain)
                .zip(&s.norm_offset)
                .map(|((&v, &g), &o)| g * v + o)
                .collect();
            let mut a: Vec<T> = normed.iter().map(|&v| if v > T::zero() { v } else { slope * v }).collect();
            let mask = dropout_mask(&mut rng, p.dropout, a.len());
            apply_mask(&mut a, &mask);
            stages.push(StageTrace {
                input: std::mem::replace(&mut x, a),
                xhat,
                inv_std,
                normed,
                mask,
            });
        }

        let geoms = p.block_geoms();
        let out_geom = p.output_geom();
        let (real_plane, real) = self.branch_forward(&self.real, &geoms, &out_geom, &x, &mut rng, eps);
        let (imag_plane, imag) = self.branch_forward(&self.imag, &geoms, &out_geom, &x, &mut rng, eps);
        let nat = (out_geom.out_h(), out_geom.out_w());
        let target = (p.output_bins, p.output_frames);
        Ok((
            GeneratorOutput {
                real: crop_or_pad(&real_plane, nat, target),
                imag: crop_or_pad(&imag_plane, nat, target),
                bins: p.output_bins,
                frames: p.output_frames,
            },
            GeneratorTrace { stages, real, imag },
        ))
    }

    fn branch_forward(
        &self,
        branch: &Branch<T>,
        geoms: &[ConvGeom],
        out_geom: &ConvGeom,
        input: &[T],
        rng: &mut Option<ChaCha8Rng>,
        eps: T,
    ) -> (Vec<T>, BranchTrace<T>) {
        let mut x = input.to_vec();
        let mut blocks = Vec::with_capacity(geoms.len());
        for (b, g) in branch.blocks.iter().zip(geoms) {
            let conv = conv_transpose(g, &x, &b.kernel);
            let plane = g.out_h() * g.out_w();
            let mut xhat = Vec::with_capacity(conv.len());
            let mut inv_std = Vec::with_capacity(g.out_ch);
            for ch in conv.chunks(plane) {
                let (h, s) = normalize(ch, eps);
                xhat.extend(h);
                inv_std.push(s);
            }
            let normed: Vec<T> = xhat
                .iter()
                .enumerate()
                .map(|(i, &v)| b.norm_gain[i / plane] * v + b.norm_offset[i / plane])
                .collect();
            let mut a: Vec<T> = normed.iter().map(|&v| v.max(T::zero())).collect();
            let mask = dropout_mask(rng, self.params.dropout, a.len());
            apply_mask(&mut a, &mask);
            blocks.push(BlockTrace {
                input: std::mem::replace(&mut x, a),
                xhat,
                inv_std,
                normed,
                mask,
            });
        }
        let mut out = conv_transpose(out_geom, &x, &branch.out_kernel);
        out.iter_mut().for_each(|v| *v += branch.out_bias[0]);
        (out, BranchTrace { blocks, out_input: x })
    }

    pub fn forward(&self, features: &[T], mode: Mode) -> Result<GeneratorOutput<T>> {
        Ok(self.forward_traced(features, mode)?.0)
    }

    /// Gradients of all parameters and of the input features, given the
    /// upstream gradient on the real and imaginary output planes.
    pub fn backward(
        &self,
        trace: &GeneratorTrace<T>,
        grad_real: &[T],
        grad_imag: &[T],
    ) -> Result<(GeneratorWeights<T>, Vec<T>)> {
        let p = &self.params;
        let target = p.output_bins * p.output_frames;
        if grad_real.len() != target || grad_imag.len() != target {
            return Err(Error::DimensionMismatch(format!(
                "upstream gradients have {} and {} values, planes hold {target}",
                grad_real.len(),
                grad_imag.len()
            )));
        }
        let mut grads = GeneratorWeights::<T>::zeros(p)?;
        let geoms = p.block_geoms();
        let out_geom = p.output_geom();
        let mut gx = branch_backward(&self.real, &mut grads.real, &trace.real, &geoms, &out_geom, grad_real, p);
        let gi = branch_backward(&self.imag, &mut grads.imag, &trace.imag, &geoms, &out_geom, grad_imag, p);
        gx.iter_mut().zip(&gi).for_each(|(a, &b)| *a += b);

        let slope = T::c(p.leaky_slope);
        for ((s, g), t) in self.mlp.iter().zip(grads.mlp.iter_mut()).zip(&trace.stages).rev() {
            apply_mask(&mut gx, &t.mask);
            let gy: Vec<T> = gx
                .iter()
                .zip(&t.normed)
                .map(|(&g, &y)| if y > T::zero() { g } else { g * slope })
                .collect();
            let mut gxhat = vec![T::zero(); gy.len()];
            for j in 0..gy.len() {
                g.norm_gain[j] += gy[j] * t.xhat[j];
                g.norm_offset[j] += gy[j];
                gxhat[j] = gy[j] * s.norm_gain[j];
            }
            let gz = normalize_backward(&t.xhat, t.inv_std, &gxhat);
            gx = linear_backward(&s.weight, &t.input, &gz, &mut g.weight, &mut g.bias);
        }
        Ok((grads, gx))
    }
}

fn branch_backward<T: Scalar>(
    branch: &Branch<T>,
    grads: &mut Branch<T>,
    trace: &BranchTrace<T>,
    geoms: &[ConvGeom],
    out_geom: &ConvGeom,
    grad_plane: &[T],
    p: &super::GeneratorParams,
) -> Vec<T> {
    let nat = (out_geom.out_h(), out_geom.out_w());
    let g_out = crop_or_pad_backward(grad_plane, nat, (p.output_bins, p.output_frames));
    grads.out_bias[0] += g_out.iter().copied().sum::<T>();
    let mut gx = conv_transpose_backward(out_geom, &trace.out_input, &branch.out_kernel, &g_out, &mut grads.out_kernel);
    for (((b, gb), t), g) in branch
        .blocks
        .iter()
        .zip(grads.blocks.iter_mut())
        .zip(&trace.blocks)
        .zip(geoms)
        .rev()
    {
        apply_mask(&mut gx, &t.mask);
        let plane = g.out_h() * g.out_w();
        let mut gconv = Vec::with_capacity(gx.len());
        for c in 0..g.out_ch {
            let range = c * plane..(c + 1) * plane;
            let mut gxhat = vec![T::zero(); plane];
            for (k, i) in range.clone().enumerate() {
                let gy = if t.normed[i] > T::zero() { gx[i] } else { T::zero() };
                gb.norm_gain[c] += gy * t.xhat[i];
                gb.norm_offset[c] += gy;
                gxhat[k] = gy * b.norm_gain[c];
            }
            gconv.extend(normalize_backward(&t.xhat[range], t.inv_std[c], &gxhat));
        }
        gx = conv_transpose_backward(g, &t.input, &b.kernel, &gconv, &mut gb.kernel);
    }
    gx
}

/// Generator plus a one-slot tape holding the last recorded forward pass.
#[derive(Debug, Clone)]
pub struct Generator<T> {
    pub weights: GeneratorWeights<T>,
    tape: Option<GeneratorTrace<T>>,
}

impl<T: Scalar> Generator<T> {
    pub fn new(weights: GeneratorWeights<T>) -> Self {
        Self { weights, tape: None }
    }

    /// Forward pass that records activations for the next `backward`.
    pub fn forward(&mut self, features: &[T], mode: Mode) -> Result<GeneratorOutput<T>> {
        let (out, trace) = self.weights.forward_traced(features, mode)?;
        self.tape = Some(trace);
        Ok(out)
    }

    /// Consumes the recorded forward pass.
    pub fn backward(&mut self, grad_real: &[T], grad_imag: &[T]) -> Result<(GeneratorWeights<T>, Vec<T>)> {
        let trace = self.tape.take().ok_or(Error::NoForwardPass)?;
        self.weights.backward(&trace, grad_real, grad_imag)
    }

    pub fn has_tape(&self) -> bool {
        self.tape.is_some()
    }
}

/// Maps a window's features to a complex spectrogram.
pub fn generate_spectrogram(
    weights: &GeneratorWeights<f32>,
    features: &FeatureVector,
    mode: Mode,
    stft: &StftConfig,
    sample_rate: u32,
) -> Result<ComplexSpectrogram> {
    if weights.params.output_bins != stft.bins() {
        return Err(Error::DimensionMismatch(format!(
            "generator emits {} bins, n_fft {} needs {}",
            weights.params.output_bins,
            stft.n_fft,
            stft.bins()
        )));
    }
    let out = weights.forward(features.values(), mode)?;
    let shape = vec![out.bins, out.frames];
    ComplexSpectrogram::new(
        Tensor::new(shape.clone(), out.real)?,
        Tensor::new(shape, out.imag)?,
        sample_rate,
        stft.n_fft,
        stft.hop,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ParamSet;
    use crate::specgen::GeneratorParams;

    fn feats(n: usize) -> Vec<f64> {
        (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect()
    }

    #[test]
    fn toy_output_shape() {
        let p = GeneratorParams::toy(32, 33, 10);
        let w = GeneratorWeights::<f32>::init(&p, 1).unwrap();
        let phi = FeatureVector::new(vec![0.5; 32]);
        let s = generate_spectrogram(&w, &phi, Mode::Eval, &StftConfig { n_fft: 64, hop: 16 }, 22050).unwrap();
        assert_eq!(s.real.shape(), &[33, 10]);
        assert_eq!(s.imag.shape(), &[33, 10]);
    }

    #[test]
    fn zero_weights_give_zero_planes() {
        let w = GeneratorWeights::<f64>::zeros(&GeneratorParams::toy(8, 9, 4)).unwrap();
        let out = w.forward(&feats(8), Mode::Train { seed: 1 }).unwrap();
        assert!(out.real.iter().chain(&out.imag).all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_wrong_feature_length() {
        let w = GeneratorWeights::<f64>::init(&GeneratorParams::toy(8, 9, 4), 0).unwrap();
        assert!(matches!(w.forward(&feats(7), Mode::Eval), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn eval_is_deterministic_and_dropout_is_seeded() {
        let w = GeneratorWeights::<f64>::init(&GeneratorParams::toy(8, 9, 4), 2).unwrap();
        let x = feats(8);
        assert_eq!(w.forward(&x, Mode::Eval).unwrap(), w.forward(&x, Mode::Eval).unwrap());
        let a = w.forward(&x, Mode::Train { seed: 5 }).unwrap();
        assert_eq!(a, w.forward(&x, Mode::Train { seed: 5 }).unwrap());
        assert_ne!(a, w.forward(&x, Mode::Train { seed: 6 }).unwrap());
        assert_ne!(a, w.forward(&x, Mode::Eval).unwrap());
    }

    #[test]
    fn backward_requires_tape() {
        let w = GeneratorWeights::<f64>::init(&GeneratorParams::toy(8, 9, 4), 2).unwrap();
        let mut g = Generator::new(w);
        assert!(matches!(g.backward(&[0.0; 36], &[0.0; 36]), Err(Error::NoForwardPass)));
        g.forward(&feats(8), Mode::Eval).unwrap();
        let (grads, gx) = g.backward(&[0.0; 36], &[0.0; 36]).unwrap();
        assert!(grads.flatten().iter().all(|&v| v == 0.0));
        assert!(gx.iter().all(|&v| v == 0.0));
        assert!(!g.has_tape());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        // Linear probe loss sum(a * real + b * imag): upstream gradient is (a, b).
        let mut p = GeneratorParams::toy(8, 9, 4);
        p.dropout = 0.0;
        let w = GeneratorWeights::<f64>::init(&p, 11).unwrap();
        let x = feats(8);
        let a: Vec<f64> = (0..36).map(|i| ((i * 5 % 13) as f64 - 6.0) / 6.0).collect();
        let b: Vec<f64> = (0..36).map(|i| ((i * 3 % 7) as f64 - 3.0) / 3.0).collect();
        let loss = |w: &GeneratorWeights<f64>| {
            let o = w.forward(&x, Mode::Eval).unwrap();
            o.real.iter().zip(&a).chain(o.imag.iter().zip(&b)).map(|(v, k)| v * k).sum::<f64>()
        };
        let (_, trace) = w.forward_traced(&x, Mode::Eval).unwrap();
        let (grads, _) = w.backward(&trace, &a, &b).unwrap();
        let analytic = grads.flatten();
        let flat = w.flatten();
        let mut probe = w.clone();
        for i in (0..flat.len()).step_by(7) {
            let mut f = flat.clone();
            f[i] += 1e-5;
            probe.load_flat(&f).unwrap();
            let up = loss(&probe);
            f[i] -= 2e-5;
            probe.load_flat(&f).unwrap();
            let down = loss(&probe);
            let num = (up - down) / 2e-5;
            let err = (num - analytic[i]).abs() / num.abs().max(analytic[i].abs()).max(1e-12);
            assert!(err < 1e-5 || (num - analytic[i]).abs() < 1e-9, "param {i}: {num} vs {}", analytic[i]);
        }
    }
}
