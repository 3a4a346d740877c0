//! Spectral machinery: FFT, STFT/ISTFT and mel cepstra.

pub mod fft;
pub mod mel;
pub mod stft;

pub use fft::Fft;
pub use mel::{mel_cepstra, MelConfig};
pub use stft::{hann_window, istft, istft_into, stft, StftConfig};
