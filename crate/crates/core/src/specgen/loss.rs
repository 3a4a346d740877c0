use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::cross_entropy;
use crate::scalar::Scalar;
use crate::spectrogram::ComplexSpectrogram;
use crate::tensor::Tensor;

/// Added in quadrature to the magnitude, `sqrt(r^2 + i^2 + MAG_EPS^2)`, so the
/// magnitude stays differentiable at the origin and never deviates from the
/// exact modulus by more than `MAG_EPS`.
pub const MAG_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub sc: f64,
    pub mse: f64,
    pub spec: f64,
    pub l1_scale: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            sc: 0.5,
            mse: 0.0,
            spec: 2.0,
            l1_scale: 2.0,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if [self.sc, self.mse, self.spec, self.l1_scale].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("loss weights must be finite and >= 0: {self:?}")));
        }
        Ok(())
    }
}

/// Per-term values of the complex spectrogram loss.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1_real: f64,
    pub l1_imag: f64,
    pub l1_mag: f64,
    pub sc_real: f64,
    pub sc_imag: f64,
    pub mse_real: f64,
    pub mse_imag: f64,
    pub total: f64,
}

fn sign<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        -T::one()
    } else {
        T::zero()
    }
}

fn norm<T: Scalar>(v: impl Iterator<Item = T>) -> T {
    v.map(|x| x * x).sum::<T>().sqrt()
}

/// `||a - b|| / ||a||` over absolute values, plus its gradient w.r.t. `b`'s
/// signed source values.
fn sc_plane<T: Scalar>(truth: &[T], pred: &[T]) -> Result<(T, Vec<T>)> {
    let ref_norm = norm(truth.iter().map(|v| v.abs()));
    if ref_norm == T::zero() {
        return Err(Error::ZeroNormReference);
    }
    let diff: Vec<T> = pred.iter().zip(truth).map(|(p, t)| p.abs() - t.abs()).collect();
    let diff_norm = norm(diff.iter().copied());
    let grad = if diff_norm == T::zero() {
        vec![T::zero(); pred.len()]
    } else {
        diff.iter()
            .zip(pred)
            .map(|(&d, &p)| d / (diff_norm * ref_norm) * sign(p))
            .collect()
    };
    Ok((diff_norm / ref_norm, grad))
}

/// Complex spectrogram loss on raw planes and its gradient w.r.t. the
/// predicted planes. Subgradients at kinks are 0.
pub fn complex_loss_with_grad<T: Scalar>(
    true_real: &[T],
    true_imag: &[T],
    pred_real: &[T],
    pred_imag: &[T],
    w: &LossWeights,
) -> Result<(LossBreakdown, Vec<T>, Vec<T>)> {
    let n = true_real.len();
    if n == 0 || [true_imag.len(), pred_real.len(), pred_imag.len()].iter().any(|&l| l != n) {
        return Err(Error::DimensionMismatch(format!(
            "loss planes differ in size or are empty: {n}, {}, {}, {}",
            true_imag.len(),
            pred_real.len(),
            pred_imag.len()
        )));
    }
    w.validate()?;
    let nf = T::c(n as f64);
    let eps2 = T::c(MAG_EPS * MAG_EPS);
    let (l1s, scw, msew) = (T::c(w.l1_scale), T::c(w.sc), T::c(w.mse));
    let two = T::c(2.0);

    let mut gr = vec![T::zero(); n];
    let mut gi = vec![T::zero(); n];
    let (mut l1r, mut l1i, mut l1m, mut mser, mut msei) = (T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    for j in 0..n {
        let (tr, ti, pr, pi) = (true_real[j], true_imag[j], pred_real[j], pred_imag[j]);
        let (dr, di) = (pr - tr, pi - ti);
        let mt = (tr * tr + ti * ti + eps2).sqrt();
        let mp = (pr * pr + pi * pi + eps2).sqrt();
        let dm = mp - mt;
        l1r += dr.abs();
        l1i += di.abs();
        l1m += dm.abs();
        mser += dr * dr;
        msei += di * di;
        let sm = sign(dm);
        gr[j] = l1s * (sign(dr) + sm * pr / mp) / nf + msew * two * dr / nf;
        gi[j] = l1s * (sign(di) + sm * pi / mp) / nf + msew * two * di / nf;
    }
    let (l1r, l1i, l1m, mser, msei) = (l1r / nf, l1i / nf, l1m / nf, mser / nf, msei / nf);
    let (scr, g_scr) = sc_plane(true_real, pred_real)?;
    let (sci, g_sci) = sc_plane(true_imag, pred_imag)?;
    for j in 0..n {
        gr[j] += scw * g_scr[j];
        gi[j] += scw * g_sci[j];
    }
    let total = l1s * (l1r + l1i + l1m) + scw * (scr + sci) + msew * (mser + msei);
    Ok((
        LossBreakdown {
            l1_real: l1r.f64(),
            l1_imag: l1i.f64(),
            l1_mag: l1m.f64(),
            sc_real: scr.f64(),
            sc_imag: sci.f64(),
            mse_real: mser.f64(),
            mse_imag: msei.f64(),
            total: total.f64(),
        },
        gr,
        gi,
    ))
}

fn as_f64(t: &Tensor) -> Vec<f64> {
    t.data().iter().map(|&v| v as f64).collect()
}

/// `||M_true - M_pred||_F / ||M_true||_F`.
pub fn spectral_convergence(truth: &Tensor, pred: &Tensor) -> Result<f64> {
    if truth.shape() != pred.shape() {
        return Err(Error::DimensionMismatch(format!(
            "magnitudes {:?} vs {:?}",
            truth.shape(),
            pred.shape()
        )));
    }
    Ok(sc_plane(&as_f64(truth), &as_f64(pred))?.0)
}

/// Weighted sum of L1 (real, imaginary, magnitude), spectral convergence
/// and MSE terms, evaluated in `f64`.
pub fn complex_spectrogram_loss(
    truth: &ComplexSpectrogram,
    pred: &ComplexSpectrogram,
    w: &LossWeights,
) -> Result<LossBreakdown> {
    if truth.real.shape() != pred.real.shape() {
        return Err(Error::DimensionMismatch(format!(
            "spectrograms {:?} vs {:?}",
            truth.real.shape(),
            pred.real.shape()
        )));
    }
    let (b, _, _) = complex_loss_with_grad(
        &as_f64(&truth.real),
        &as_f64(&truth.imag),
        &as_f64(&pred.real),
        &as_f64(&pred.imag),
        w,
    )?;
    Ok(b)
}

/// `cross_entropy(logits, label) + spec * complex_spectrogram_loss`.
pub fn combined_loss(
    logits: &[f64],
    label: usize,
    truth: &ComplexSpectrogram,
    pred: &ComplexSpectrogram,
    w: &LossWeights,
) -> Result<f64> {
    let ce = cross_entropy(logits, label)?;
    if w.spec == 0.0 {
        return Ok(ce);
    }
    Ok(ce + w.spec * complex_spectrogram_loss(truth, pred, w)?.total)
}
