//! Writes a complex spectrogram to disk with its sidecar, reads it back,
//! inverts it and saves the result as a WAV file.

use signvox::dsp::{istft, stft, StftConfig};
use signvox::metrics::snr;
use signvox::{AudioBuffer, ComplexSpectrogram};

fn main() -> signvox::Result<()> {
    let rate = 22050;
    let samples = (0..rate as usize)
        .map(|i| {
            let t = i as f32 / rate as f32;
            0.4 * (2.0 * std::f32::consts::PI * 440.0 * t).sin() + 0.2 * (2.0 * std::f32::consts::PI * 660.0 * t).sin()
        })
        .collect();
    let audio = AudioBuffer::new(samples, rate);
    let cfg = StftConfig { n_fft: 2048, hop: 512 };
    let spec = stft(&audio, &cfg)?;

    let dir = std::env::temp_dir().join("signvox_spectrogram_to_wav");
    std::fs::create_dir_all(&dir).map_err(|e| signvox::Error::io(&dir, e))?;
    let path = dir.join("chord.isvt");
    spec.write(&path)?;
    let loaded = ComplexSpectrogram::read(&path)?;
    println!("{} bins x {} frames read from {}", loaded.bins(), loaded.frames(), path.display());

    let out = istft(&loaded, &cfg)?;
    let wav = dir.join("chord.wav");
    out.write_wav(&wav)?;
    let n = out.len().min(audio.len()) - cfg.n_fft;
    let inner = |a: &AudioBuffer| AudioBuffer::new(a.samples[cfg.n_fft..n].to_vec(), rate);
    println!("wrote {} ({} samples), interior SNR {:.1} dB (the metric caps at 120)", wav.display(), out.len(), snr(&inner(&audio), &inner(&out))?);
    Ok(())
}
