use crate::audio::AudioBuffer;
use crate::dsp::{mel_cepstra, MelConfig};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Value reported by [`snr`] when the residual is exactly zero.
pub const SNR_CAP_DB: f64 = 120.0;

fn same_rate(a: &AudioBuffer, b: &AudioBuffer) -> Result<()> {
    if a.sample_rate != b.sample_rate {
        return Err(Error::DimensionMismatch(format!(
            "sample rates {} and {} differ",
            a.sample_rate, b.sample_rate
        )));
    }
    Ok(())
}

/// `10 log10(sum(ref^2) / sum((ref - test)^2))` in dB, capped at
/// [`SNR_CAP_DB`].
pub fn snr(reference: &AudioBuffer, test: &AudioBuffer) -> Result<f64> {
    if reference.len() != test.len() {
        return Err(Error::DimensionMismatch(format!(
            "reference has {} samples, test has {}",
            reference.len(),
            test.len()
        )));
    }
    let signal: f64 = reference.samples.iter().map(|&r| (r as f64).powi(2)).sum();
    if signal == 0.0 {
        return Err(Error::ZeroNormReference);
    }
    let noise: f64 = reference
        .samples
        .iter()
        .zip(&test.samples)
        .map(|(&r, &t)| (r as f64 - t as f64).powi(2))
        .sum();
    if noise == 0.0 {
        return Ok(SNR_CAP_DB);
    }
    Ok((10.0 * (signal / noise).log10()).min(SNR_CAP_DB))
}

/// Mean squared difference of two equally shaped tensors.
pub fn mse_metric(a: &Tensor, b: &Tensor) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if a.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    Ok(sum / a.len() as f64)
}

/// Mel cepstral distortion with the default [`MelConfig`].
pub fn mcd(reference: &AudioBuffer, test: &AudioBuffer) -> Result<f64> {
    mcd_with(reference, test, &MelConfig::default())
}

/// Mean over frames of `(10 / ln 10) * sqrt(2 * sum_i (c_i - c'_i)^2)`.
/// Frames beyond the shorter input are ignored.
pub fn mcd_with(reference: &AudioBuffer, test: &AudioBuffer, cfg: &MelConfig) -> Result<f64> {
    same_rate(reference, test)?;
    let a = mel_cepstra(reference, cfg)?;
    let b = mel_cepstra(test, cfg)?;
    let frames = a.shape()[0].min(b.shape()[0]);
    let n = cfg.n_coeffs;
    let scale = 10.0 / std::f64::consts::LN_10;
    let total: f64 = (0..frames)
        .map(|m| {
            let sq: f64 = a.data()[m * n..(m + 1) * n]
                .iter()
                .zip(&b.data()[m * n..(m + 1) * n])
                .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
                .sum();
            scale * (2.0 * sq).sqrt()
        })
        .sum();
    Ok(total / frames as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sine(len: usize) -> AudioBuffer {
        AudioBuffer::new(
            (0..len).map(|i| (i as f32 * 0.05).sin()).collect(),
            16000,
        )
    }

    #[test]
    fn snr_cases() {
        let r = sine(1000);
        assert_eq!(snr(&r, &r).unwrap(), SNR_CAP_DB);
        let zero = AudioBuffer::silence(1000, 16000);
        assert!(snr(&r, &zero).unwrap().abs() < 1e-9);
        let t = AudioBuffer::new(r.samples.iter().map(|s| s * 1.1).collect(), 16000);
        assert!((snr(&r, &t).unwrap() - 20.0).abs() < 1e-4);
        assert!(matches!(snr(&zero, &r), Err(Error::ZeroNormReference)));
        assert!(snr(&r, &sine(999)).is_err());
    }

    #[test]
    fn mse_cases() {
        let a = Tensor::from_vec(vec![0.0, 0.0]);
        let b = Tensor::from_vec(vec![1.0, 3.0]);
        assert_eq!(mse_metric(&a, &b).unwrap(), 5.0);
        assert_eq!(mse_metric(&b, &b).unwrap(), 0.0);
        let c = b.map(|v| v + 0.5);
        assert!((mse_metric(&b, &c).unwrap() - 0.25).abs() < 1e-12);
        assert!(mse_metric(&a, &Tensor::zeros(vec![3])).is_err());
    }

    #[test]
    fn mcd_identity_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = AudioBuffer::new((0..8000).map(|_| rng.gen_range(-0.5..0.5)).collect(), 16000);
        let b = AudioBuffer::new((0..6000).map(|_| rng.gen_range(-0.5..0.5)).collect(), 16000);
        assert_eq!(mcd(&a, &a).unwrap(), 0.0);
        let ab = mcd(&a, &b).unwrap();
        assert!(ab > 0.0);
        assert_eq!(ab, mcd(&b, &a).unwrap());
        let other_rate = AudioBuffer::new(b.samples.clone(), 8000);
        assert!(mcd(&a, &other_rate).is_err());
        assert!(mcd(&a, &AudioBuffer::silence(10, 16000)).is_err());
    }
}
