//! Complex spectrograms as paired real/imaginary planes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Real and imaginary planes of shape `bins x frames`, row-major by bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSpectrogram {
    pub real: Tensor,
    pub imag: Tensor,
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
}

/// JSON sidecar stored next to an interchanged spectrogram tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrogramSidecar {
    pub n_fft: usize,
    pub hop: usize,
    pub sample_rate: u32,
    #[serde(default = "default_window")]
    pub window: String,
    #[serde(default)]
    pub center: bool,
}

fn default_window() -> String {
    "hann".into()
}

impl ComplexSpectrogram {
    pub fn new(
        real: Tensor,
        imag: Tensor,
        sample_rate: u32,
        n_fft: usize,
        hop: usize,
    ) -> Result<Self> {
        if real.shape() != imag.shape() || real.rank() != 2 {
            return Err(Error::DimensionMismatch(format!(
                "real {:?} vs imag {:?}",
                real.shape(),
                imag.shape()
            )));
        }
        if real.shape()[0] != n_fft / 2 + 1 {
            return Err(Error::DimensionMismatch(format!(
                "{} bins inconsistent with n_fft {n_fft}",
                real.shape()[0]
            )));
        }
        if hop == 0 {
            return Err(Error::InvalidConfig("hop must be at least 1".into()));
        }
        Ok(Self {
            real,
            imag,
            sample_rate,
            n_fft,
            hop,
        })
    }

    pub fn zeros(bins: usize, frames: usize, sample_rate: u32, n_fft: usize, hop: usize) -> Result<Self> {
        Self::new(
            Tensor::zeros(vec![bins, frames]),
            Tensor::zeros(vec![bins, frames]),
            sample_rate,
            n_fft,
            hop,
        )
    }

    pub fn bins(&self) -> usize {
        self.real.shape()[0]
    }

    pub fn frames(&self) -> usize {
        self.real.shape()[1]
    }

    /// Audio length produced by an untrimmed inverse transform.
    pub fn audio_len(&self) -> usize {
        (self.frames() - 1) * self.hop + self.n_fft
    }

    pub fn magnitude(&self) -> Tensor {
        let data = self
            .real
            .data()
            .iter()
            .zip(self.imag.data())
            .map(|(r, i)| r.hypot(*i))
            .collect();
        Tensor::new(self.real.shape().to_vec(), data).expect("same shape")
    }

    /// Stacks into one `2 x bins x frames` tensor, plane 0 real, plane 1 imag.
    pub fn to_tensor(&self) -> Tensor {
        let mut data = Vec::with_capacity(2 * self.real.len());
        data.extend_from_slice(self.real.data());
        data.extend_from_slice(self.imag.data());
        Tensor::new(vec![2, self.bins(), self.frames()], data).expect("consistent shape")
    }

    pub fn from_tensor(t: &Tensor, sidecar: &SpectrogramSidecar) -> Result<Self> {
        if t.rank() != 3 || t.shape()[0] != 2 {
            return Err(Error::DimensionMismatch(format!(
                "expected 2 x bins x frames, got {:?}",
                t.shape()
            )));
        }
        let (bins, frames) = (t.shape()[1], t.shape()[2]);
        let plane = bins * frames;
        let real = Tensor::new(vec![bins, frames], t.data()[..plane].to_vec())?;
        let imag = Tensor::new(vec![bins, frames], t.data()[plane..].to_vec())?;
        Self::new(real, imag, sidecar.sample_rate, sidecar.n_fft, sidecar.hop)
    }

    pub fn sidecar(&self) -> SpectrogramSidecar {
        SpectrogramSidecar {
            n_fft: self.n_fft,
            hop: self.hop,
            sample_rate: self.sample_rate,
            window: default_window(),
            center: false,
        }
    }

    /// Writes `path` (ISVT) and `path.json` (sidecar).
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.to_tensor().write(path)?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        fs::write(&side, json).map_err(|e| Error::io(side, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let t = Tensor::read(path)?;
        let side = sidecar_path(path);
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let sidecar: SpectrogramSidecar = serde_json::from_str(&text)?;
        Self::from_tensor(&t, &sidecar)
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}
