//! Audio and transcript quality reports on synthetic inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signvox::metrics::{audio_report, transcript_report, TranscriptPair};
use signvox::AudioBuffer;

fn main() -> signvox::Result<()> {
    let rate = 16000;
    let tau = std::f64::consts::TAU;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // Broadband noise with a syllable-rate envelope, so every analysis band
    // carries energy.
    let clean: Vec<f32> = (0..2 * rate as usize)
        .map(|i| {
            let env = 0.5 + 0.5 * (tau * 4.0 * i as f64 / rate as f64).sin();
            (env * rng.gen_range(-1.0..1.0)) as f32
        })
        .collect();
    let reference = AudioBuffer::new(clean.clone(), rate);
    for amp in [0.01f32, 0.1, 0.5] {
        let noisy = AudioBuffer::new(clean.iter().map(|v| v + rng.gen_range(-amp..amp)).collect(), rate);
        let r = audio_report(&reference, &noisy)?;
        println!("noise {amp}: {}", serde_json::to_string(&r)?);
    }

    let pairs = [
        TranscriptPair::from_text("please help me", "please help me"),
        TranscriptPair::from_text("where is the station", "where the station"),
        TranscriptPair::from_text("thank you very much", "thank you much very"),
    ];
    println!("{}", serde_json::to_string_pretty(&transcript_report(&pairs)?)?);
    Ok(())
}
