//! Trains the toy generator on 64 noisy prototype features mapped to class
//! tones and reports the training loss before and after 200 iterations.

use std::time::Instant;

use signvox::datasets::ToneFixture;
use signvox::dsp::StftConfig;
use signvox::specgen::{GeneratorParams, GeneratorWeights};
use signvox::train::{specgen_eval_loss, train_specgen, SpecgenTrainConfig};

fn main() -> signvox::Result<()> {
    let params = GeneratorParams::toy(32, 33, 10);
    let fixture = ToneFixture {
        classes: 4,
        feature_dim: 32,
        frames: 10,
        stft: StftConfig { n_fft: 64, hop: 16 },
        sample_rate: 16000,
        noise: 0.1,
        seed: 0,
    };
    let data = fixture.specgen(64)?;
    let mut weights = GeneratorWeights::init(&params, 0)?;
    let cfg = SpecgenTrainConfig {
        max_iterations: Some(200),
        max_epochs: 200,
        early_stop_patience: None,
        ..Default::default()
    };
    let before = specgen_eval_loss(&weights, &data, &cfg.loss)?;
    let start = Instant::now();
    let history = train_specgen(&mut weights, &data, &[], &cfg)?;
    let after = specgen_eval_loss(&weights, &data, &cfg.loss)?;
    println!(
        "iterations {}  loss {before:.4} -> {after:.4}  ({:.1}% lower)  {:.1}s",
        history.step_losses.len(),
        100.0 * (1.0 - after / before),
        start.elapsed().as_secs_f64()
    );
    for e in history.epochs.iter().step_by(20) {
        println!("epoch {:>3}  train {:.4}  lr {:.1e}", e.epoch, e.train_loss, e.lrs[0]);
    }
    Ok(())
}
