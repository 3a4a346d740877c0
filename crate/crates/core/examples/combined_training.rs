//! Joint training of the toy classifier and generator for 100 mini-batch
//! steps: accumulated SGD on the classifier, Adam on the generator.

use std::time::Instant;

use signvox::datasets::ToneFixture;
use signvox::dsp::StftConfig;
use signvox::extractor::ToyClassifier;
use signvox::specgen::{GeneratorParams, GeneratorWeights};
use signvox::train::{combined_eval_loss, train_combined, CombinedTrainConfig};

fn main() -> signvox::Result<()> {
    let mut classifier = ToyClassifier::<f32>::init(2, 32, 4, 0);
    let mut generator = GeneratorWeights::init(&GeneratorParams::toy(32, 33, 10), 0)?;
    let fixture = ToneFixture {
        classes: 4,
        feature_dim: classifier.input_dim(),
        frames: 10,
        stft: StftConfig { n_fft: 64, hop: 16 },
        sample_rate: 16000,
        noise: 0.1,
        seed: 0,
    };
    let data = fixture.combined(64)?;
    let cfg = CombinedTrainConfig {
        max_steps: Some(100),
        early_stop_patience: None,
        ..Default::default()
    };
    let before = combined_eval_loss(&classifier, &generator, &data, &cfg.loss)?;
    let start = Instant::now();
    let history = train_combined(&mut classifier, &mut generator, &data, &[], &cfg)?;
    let after = combined_eval_loss(&classifier, &generator, &data, &cfg.loss)?;
    println!(
        "steps {}  combined loss {before:.4} -> {after:.4}  {:.1}s",
        history.step_losses.len(),
        start.elapsed().as_secs_f64()
    );
    for e in &history.epochs {
        println!(
            "epoch {}  train {:.4}  val {:.4}  classifier lr {:.1e}  generator lr {:.1e}",
            e.epoch, e.train_loss, e.val_loss, e.lrs[0], e.lrs[1]
        );
    }
    Ok(())
}
