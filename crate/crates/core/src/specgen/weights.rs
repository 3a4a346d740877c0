use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::GeneratorParams;
use crate::error::{Error, Result};
use crate::scalar::{ParamSet, Scalar};
use crate::tensor::Tensor;

/// Linear layer followed by layer normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpStage<T> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim x in_dim`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub norm_gain: Vec<T>,
    pub norm_offset: Vec<T>,
}

/// Transposed convolution (no bias; instance norm cancels it) plus
/// per-channel instance-norm affine.
#[derive(Debug, Clone, PartialEq)]
pub struct DeconvBlock<T> {
    /// `in_ch x out_ch x kh x kw`
    pub kernel: Vec<T>,
    pub norm_gain: Vec<T>,
    pub norm_offset: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch<T> {
    pub blocks: Vec<DeconvBlock<T>>,
    /// `in_ch x 1 x 3 x 3`
    pub out_kernel: Vec<T>,
    pub out_bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorWeights<T> {
    pub params: GeneratorParams,
    pub mlp: Vec<MlpStage<T>>,
    pub real: Branch<T>,
    pub imag: Branch<T>,
}

impl<T: Scalar> GeneratorWeights<T> {
    /// All parameters zero, normalization gains included.
    pub fn zeros(params: &GeneratorParams) -> Result<Self> {
        params.validate()?;
        let mut dims = vec![params.input_dim];
        dims.extend(&params.mlp_dims);
        let mlp = dims
            .windows(2)
            .map(|d| MlpStage {
                in_dim: d[0],
                out_dim: d[1],
                weight: vec![T::zero(); d[0] * d[1]],
                bias: vec![T::zero(); d[1]],
                norm_gain: vec![T::zero(); d[1]],
                norm_offset: vec![T::zero(); d[1]],
            })
            .collect();
        let branch = || {
            let blocks = params
                .block_geoms()
                .iter()
                .map(|g| DeconvBlock {
                    kernel: vec![T::zero(); g.in_ch * g.out_ch * g.kernel[0] * g.kernel[1]],
                    norm_gain: vec![T::zero(); g.out_ch],
                    norm_offset: vec![T::zero(); g.out_ch],
                })
                .collect();
            let out = params.output_geom();
            Branch {
                blocks,
                out_kernel: vec![T::zero(); out.in_ch * out.kernel[0] * out.kernel[1]],
                out_bias: vec![T::zero()],
            }
        };
        Ok(Self {
            params: params.clone(),
            mlp,
            real: branch(),
            imag: branch(),
        })
    }

    /// Uniform `±1/sqrt(fan_in)` weights and kernels, zero biases and
    /// offsets, unit normalization gains.
    pub fn init(params: &GeneratorParams, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(params)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform = |v: &mut [T], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            v.iter_mut().for_each(|x| *x = T::c(rng.gen_range(-bound..bound)));
        };
        for s in &mut w.mlp {
            uniform(&mut s.weight, s.in_dim);
            s.norm_gain.iter_mut().for_each(|g| *g = T::one());
        }
        let geoms = params.block_geoms();
        let out = params.output_geom();
        for branch in [&mut w.real, &mut w.imag] {
            for (b, g) in branch.blocks.iter_mut().zip(&geoms) {
                uniform(&mut b.kernel, g.in_ch * g.kernel[0] * g.kernel[1]);
                b.norm_gain.iter_mut().for_each(|g| *g = T::one());
            }
            uniform(&mut branch.out_kernel, out.in_ch * out.kernel[0] * out.kernel[1]);
        }
        Ok(w)
    }

    pub fn cast<U: Scalar>(&self) -> GeneratorWeights<U> {
        let mut out = GeneratorWeights::<U>::zeros(&self.params).expect("params already validated");
        let flat: Vec<U> = self.flatten().into_iter().map(|v| U::c(v.f64())).collect();
        out.load_flat(&flat).expect("same architecture");
        out
    }

    /// Tensor shapes in visiting order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut shapes = Vec::new();
        for (i, s) in self.mlp.iter().enumerate() {
            let p = |n: &str| format!("mlp.{i}.{n}");
            let names = [p("weight"), p("bias"), p("norm.gain"), p("norm.offset")];
            let dims = [vec![s.out_dim, s.in_dim], vec![s.out_dim], vec![s.out_dim], vec![s.out_dim]];
            shapes.extend(names.into_iter().zip(dims));
        }
        let out = self.params.output_geom();
        for tag in ["real", "imag"] {
            for (i, g) in self.params.block_geoms().iter().enumerate() {
                shapes.push((
                    format!("{tag}.block.{i}.kernel"),
                    vec![g.in_ch, g.out_ch, g.kernel[0], g.kernel[1]],
                ));
                shapes.push((format!("{tag}.block.{i}.norm.gain"), vec![g.out_ch]));
                shapes.push((format!("{tag}.block.{i}.norm.offset"), vec![g.out_ch]));
            }
            shapes.push((format!("{tag}.out.kernel"), vec![out.in_ch, 1, 3, 3]));
            shapes.push((format!("{tag}.out.bias"), vec![1]));
        }
        shapes
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, p| ok &= p.iter().all(|v| v.is_finite()));
        ok
    }
}

fn visit_branch<T>(tag: &str, b: &Branch<T>, f: &mut dyn FnMut(&str, &[T])) {
    for (i, blk) in b.blocks.iter().enumerate() {
        f(&format!("{tag}.block.{i}.kernel"), &blk.kernel);
        f(&format!("{tag}.block.{i}.norm.gain"), &blk.norm_gain);
        f(&format!("{tag}.block.{i}.norm.offset"), &blk.norm_offset);
    }
    f(&format!("{tag}.out.kernel"), &b.out_kernel);
    f(&format!("{tag}.out.bias"), &b.out_bias);
}

fn visit_branch_mut<T>(tag: &str, b: &mut Branch<T>, f: &mut dyn FnMut(&str, &mut [T])) {
    for (i, blk) in b.blocks.iter_mut().enumerate() {
        f(&format!("{tag}.block.{i}.kernel"), &mut blk.kernel);
        f(&format!("{tag}.block.{i}.norm.gain"), &mut blk.norm_gain);
        f(&format!("{tag}.block.{i}.norm.offset"), &mut blk.norm_offset);
    }
    f(&format!("{tag}.out.kernel"), &mut b.out_kernel);
    f(&format!("{tag}.out.bias"), &mut b.out_bias);
}

impl<T: Scalar> ParamSet<T> for GeneratorWeights<T> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[T])) {
        for (i, s) in self.mlp.iter().enumerate() {
            f(&format!("mlp.{i}.weight"), &s.weight);
            f(&format!("mlp.{i}.bias"), &s.bias);
            f(&format!("mlp.{i}.norm.gain"), &s.norm_gain);
            f(&format!("mlp.{i}.norm.offset"), &s.norm_offset);
        }
        visit_branch("real", &self.real, f);
        visit_branch("imag", &self.imag, f);
    }

    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [T])) {
        for (i, s) in self.mlp.iter_mut().enumerate() {
            f(&format!("mlp.{i}.weight"), &mut s.weight);
            f(&format!("mlp.{i}.bias"), &mut s.bias);
            f(&format!("mlp.{i}.norm.gain"), &mut s.norm_gain);
            f(&format!("mlp.{i}.norm.offset"), &mut s.norm_offset);
        }
        visit_branch_mut("real", &mut self.real, f);
        visit_branch_mut("imag", &mut self.imag, f);
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl GeneratorWeights<f32> {
    /// Writes `manifest.json` (the architecture) and one `<name>.isvt` per
    /// parameter tensor into `dir`, creating it if needed.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let manifest = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.params)?;
        fs::write(&manifest, json).map_err(|e| Error::io(&manifest, e))?;
        let shapes = self.param_shapes();
        let mut idx = 0;
        let mut result = Ok(());
        self.visit(&mut |name, values| {
            if result.is_err() {
                return;
            }
            let shape = shapes[idx].1.clone();
            idx += 1;
            result = Tensor::new(shape, values.to_vec())
                .and_then(|t| t.write(dir.join(format!("{name}.isvt"))));
        });
        result
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
        let params: GeneratorParams = serde_json::from_str(&text)?;
        let mut w = Self::zeros(&params)?;
        let mut result = Ok(());
        w.visit_mut(&mut |name, slot| {
            if result.is_err() {
                return;
            }
            result = Tensor::read(dir.join(format!("{name}.isvt"))).and_then(|t| {
                if t.len() != slot.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{name}: stored {} values, architecture needs {}",
                        t.len(),
                        slot.len()
                    )));
                }
                slot.copy_from_slice(t.data());
                Ok(())
            });
        });
        result?;
        if !w.is_finite() {
            return Err(Error::InvalidInput("generator weights contain non-finite values".into()));
        }
        Ok(w)
    }
}
