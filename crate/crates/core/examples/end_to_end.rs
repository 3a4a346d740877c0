//! Scripted sign stream to speech: suppression picks one window per sign,
//! the toy generator renders each, and the result is written as WAV plus a
//! JSON detection list.

use signvox::config::GlossVocab;
use signvox::datasets::{ScriptedSigns, SignEvent};
use signvox::pipeline::{run_stream, write_detections_json};
use signvox::specgen::GeneratorWeights;
use signvox::PipelineConfig;

fn main() -> signvox::Result<()> {
    let cfg = PipelineConfig { gap_ms: 5.0, ..PipelineConfig::toy() };
    let weights = GeneratorWeights::init(&cfg.generator, cfg.seed)?;
    let signs = [(30, 1, 0.9), (100, 4, 0.85), (170, 8, 0.95)]
        .into_iter()
        .map(|(centre, class, peak)| SignEvent { centre, class, peak })
        .collect();
    let script = ScriptedSigns::new(signs, 12, 0.2, cfg.class_count, cfg.feature_dim, 0)?;
    let frames = 220 + cfg.window_size - 1;
    let run = run_stream(std::iter::repeat_n((), frames), script, &weights, &cfg)?;

    let vocab = GlossVocab::new(
        ["HELLO", "HELP", "THANKS", "YES", "NO", "WATER", "FOOD", "HOME", "SCHOOL", "FRIEND"]
            .map(String::from)
            .to_vec(),
    )?;
    let dir = std::env::temp_dir().join("signvox_end_to_end");
    std::fs::create_dir_all(&dir).map_err(|e| signvox::Error::io(&dir, e))?;
    run.audio.write_wav(dir.join("speech.wav"))?;
    write_detections_json(dir.join("detections.json"), &run.detections, Some(&vocab))?;
    for d in &run.detections {
        println!(
            "position {:>3}  {:<7} confidence {:.2}",
            d.emitted_at,
            vocab.label(d.predicted_class).unwrap_or("?"),
            d.max_confidence()
        );
    }
    println!(
        "{} frames, {} extractor calls, {} samples of audio written to {}",
        run.timing.frames,
        run.timing.extractions,
        run.audio.len(),
        dir.display()
    );
    Ok(())
}
