//! Mono audio buffers and 16-bit PCM WAV I/O.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    pub fn silence(len: usize, sample_rate: u32) -> Self {
        Self::new(vec![0.0; len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Encodes as canonical RIFF/WAVE, PCM 16-bit mono.
    pub fn to_wav_bytes(&self) -> Result<Vec<u8>> {
        if self.sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        let data_len = self.samples.len() * 2;
        let mut out = Vec::with_capacity(44 + data_len);
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes()); // PCM
        out.extend_from_slice(&1u16.to_le_bytes()); // mono
        out.extend_from_slice(&self.sample_rate.to_le_bytes());
        out.extend_from_slice(&(self.sample_rate * 2).to_le_bytes());
        out.extend_from_slice(&2u16.to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(data_len as u32).to_le_bytes());
        for &s in &self.samples {
            out.extend_from_slice(&pcm16(s).to_le_bytes());
        }
        Ok(out)
    }

    /// Decodes PCM16 WAV data. Multi-channel input is downmixed by averaging.
    pub fn from_wav_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |why: &str| Error::InvalidInput(format!("malformed wav: {why}"));
        if bytes.len() < 12 || &bytes[..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
            return Err(bad("missing RIFF/WAVE header"));
        }
        let mut pos = 12;
        let mut format: Option<(u16, u16, u32, u16)> = None;
        while pos + 8 <= bytes.len() {
            let id = &bytes[pos..pos + 4];
            let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
            let body_start = pos + 8;
            let body_end = (body_start + size).min(bytes.len());
            let body = &bytes[body_start..body_end];
            match id {
                b"fmt " => {
                    if body.len() < 16 {
                        return Err(bad("short fmt chunk"));
                    }
                    let fmt = u16::from_le_bytes([body[0], body[1]]);
                    let channels = u16::from_le_bytes([body[2], body[3]]);
                    let rate = u32::from_le_bytes(body[4..8].try_into().unwrap());
                    let bits = u16::from_le_bytes([body[14], body[15]]);
                    format = Some((fmt, channels, rate, bits));
                }
                b"data" => {
                    let (fmt, channels, rate, bits) = format.ok_or_else(|| bad("data before fmt"))?;
                    if fmt != 1 || bits != 16 || channels == 0 {
                        return Err(bad("only PCM 16-bit is supported"));
                    }
                    let ch = channels as usize;
                    let samples = body
                        .chunks_exact(2 * ch)
                        .map(|frame| {
                            let sum: f32 = frame
                                .chunks_exact(2)
                                .map(|b| i16::from_le_bytes([b[0], b[1]]) as f32 / 32767.0)
                                .sum();
                            sum / ch as f32
                        })
                        .collect();
                    return Ok(AudioBuffer::new(samples, rate));
                }
                _ => {}
            }
            pos = body_start + size + (size & 1);
        }
        Err(bad("no data chunk"))
    }

    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_wav_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_wav_bytes(&bytes)
    }
}

/// Clamp to [-1, 1], scale by 32767 and round to nearest.
fn pcm16(s: f32) -> i16 {
    let s = if s.is_nan() { 0.0 } else { s.clamp(-1.0, 1.0) };
    (s * 32767.0).round() as i16
}

pub fn wav_write(audio: &AudioBuffer, path: impl AsRef<Path>) -> Result<()> {
    audio.write_wav(path)
}
