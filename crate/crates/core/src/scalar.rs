//! Float abstraction shared by the trainable models, and the parameter-set
//! visitor the optimizers work through.
//!
//! Models run in `f32` for inference and training; gradient checks
//! instantiate the same code in `f64`.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, NumAssign};

use crate::error::{Error, Result};

pub trait Scalar: Float + NumAssign + Sum + Debug + Default + Send + Sync + 'static {
    fn c(x: f64) -> Self;
    fn f64(self) -> f64;
}

impl Scalar for f32 {
    fn c(x: f64) -> Self {
        x as f32
    }
    fn f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn c(x: f64) -> Self {
        x
    }
    fn f64(self) -> f64 {
        self
    }
}

/// A fixed, ordered collection of named parameter slices.
///
/// Visiting order is stable; optimizers and gradient buffers rely on it.
pub trait ParamSet<T: Scalar> {
    fn visit(&self, f: &mut dyn FnMut(&str, &[T]));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&str, &mut [T]));

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, p| n += p.len());
        n
    }

    fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        self.visit(&mut |_, p| out.extend_from_slice(p));
        out
    }

    fn load_flat(&mut self, flat: &[T]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        self.visit_mut(&mut |_, p| {
            p.copy_from_slice(&flat[off..off + p.len()]);
            off += p.len();
        });
        Ok(())
    }

    fn fill(&mut self, value: T) {
        self.visit_mut(&mut |_, p| p.iter_mut().for_each(|v| *v = value));
    }

    fn scale(&mut self, factor: T) {
        self.visit_mut(&mut |_, p| p.iter_mut().for_each(|v| *v *= factor));
    }

    /// `self += other`, element-wise in visiting order.
    fn add_assign_from(&mut self, other: &Self) -> Result<()>
    where
        Self: Sized,
    {
        let flat = other.flatten();
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch(
                "parameter sets differ in size".into(),
            ));
        }
        let mut off = 0;
        self.visit_mut(&mut |_, p| {
            for v in p.iter_mut() {
                *v += flat[off];
                off += 1;
            }
        });
        Ok(())
    }

    fn shapes(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.visit(&mut |name, p| out.push((name.to_string(), p.len())));
        out
    }
}
