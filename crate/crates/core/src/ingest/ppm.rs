use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// 8-bit RGB image, pixels stored row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PpmImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<u8>,
}

impl PpmImage {
    /// `3 x width x height` tensor of values in `[0, 255]`.
    pub fn to_tensor(&self) -> Tensor {
        let (w, h) = (self.width, self.height);
        let mut data = vec![0.0f32; 3 * w * h];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    data[(c * w + x) * h + y] = self.rgb[(y * w + x) * 3 + c] as f32;
                }
            }
        }
        Tensor::new(vec![3, w, h], data).expect("shape matches")
    }

    /// Inverse of [`PpmImage::to_tensor`]; values are rounded and clamped.
    pub fn from_tensor(t: &Tensor) -> Result<Self> {
        let s = t.shape();
        if s.len() != 3 || s[0] != 3 {
            return Err(Error::InvalidShape {
                shape: s.to_vec(),
                len: t.len(),
            });
        }
        let (w, h) = (s[1], s[2]);
        let mut rgb = vec![0u8; 3 * w * h];
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    rgb[(y * w + x) * 3 + c] = t.data()[(c * w + x) * h + y].round().clamp(0.0, 255.0) as u8;
                }
            }
        }
        Ok(Self { width: w, height: h, rgb })
    }
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedImage {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads a binary (P6) PPM. Max values below 255 are rescaled to 255.
pub fn read_ppm(path: impl AsRef<Path>) -> Result<PpmImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut pos = 0;
    let mut token = || -> Option<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        (pos > start).then(|| String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token().as_deref() != Some("P6") {
        return Err(malformed(path, "missing P6 magic"));
    }
    let mut num = |what: &str| -> Result<usize> {
        token()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| malformed(path, format!("bad {what}")))
    };
    let (width, height, maxval) = (num("width")?, num("height")?, num("maxval")?);
    if width == 0 || height == 0 {
        return Err(malformed(path, "zero-sized image"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(malformed(path, format!("unsupported maxval {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    let start = pos + 1;
    let need = width * height * 3;
    if bytes.len() < start + need {
        return Err(malformed(
            path,
            format!("raster holds {} bytes, need {need}", bytes.len().saturating_sub(start)),
        ));
    }
    let mut rgb = bytes[start..start + need].to_vec();
    if maxval != 255 {
        rgb.iter_mut()
            .for_each(|v| *v = ((*v as u32 * 255 + maxval as u32 / 2) / maxval as u32).min(255) as u8);
    }
    Ok(PpmImage { width, height, rgb })
}

pub fn write_ppm(path: impl AsRef<Path>, img: &PpmImage) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.rgb);
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
