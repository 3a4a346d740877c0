use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use signvox::audio::AudioBuffer;
use signvox::config::{GlossVocab, PipelineConfig};
use signvox::datasets::ToneFixture;
use signvox::dsp::istft;
use signvox::extractor::{FileBackedExtractor, MockExtractor, ToyClassifier, ToyExtractor};
use signvox::ingest::{augment_clip, AugmentParams, Clip};
use signvox::metrics::{audio_report, tensor_report, transcript_report, TranscriptPair};
use signvox::nms::simulate_scores;
use signvox::pipeline::{benchmark_throughput, run_batch, write_detections_json, PipelineRun};
use signvox::spectrogram::{sidecar_path, ComplexSpectrogram};
use signvox::specgen::GeneratorWeights;
use signvox::tensor::Tensor;
use signvox::train::{
    combined_eval_loss, specgen_eval_loss, train_combined, train_specgen, CombinedTrainConfig, SpecgenTrainConfig,
};
use signvox::{Error, Result};

#[derive(Parser)]
#[command(name = "signvox", version, about = "Sign-gesture streams to speech")]
struct Cli {
    /// Pipeline configuration JSON; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Built-in configuration used when --config is absent.
    #[arg(long, global = true, value_enum, default_value_t = Preset::Toy)]
    preset: Preset,
    /// Overrides the configuration seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 2048-dim features, 1025 x 100 spectrograms.
    Full,
    /// 32-dim features, 33 x 10 spectrograms.
    Toy,
}

#[derive(Subcommand)]
enum Command {
    /// Frames or stored window features to speech WAV and detections JSON.
    Run(RunArgs),
    /// Stored complex spectrogram (ISVT) to WAV.
    Synth {
        input: PathBuf,
    },
    /// Compares two WAV files, two ISVT tensors or two transcript files.
    Metrics {
        reference: PathBuf,
        test: PathBuf,
    },
    /// Trains the generator on the synthetic tone fixture.
    TrainSpecgen {
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 200)]
        iterations: usize,
        /// Training settings JSON; missing fields take defaults.
        #[arg(long)]
        train_config: Option<PathBuf>,
    },
    /// Jointly trains the toy classifier and the generator.
    TrainCombined {
        #[arg(long, default_value_t = 64)]
        samples: usize,
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long)]
        train_config: Option<PathBuf>,
    },
    /// Suppression over a file of per-position max confidences.
    NmsSim {
        scores: PathBuf,
        /// Leave a pending candidate unreported at end of stream.
        #[arg(long)]
        no_flush: bool,
    },
    /// Pipeline throughput with the mock extractor.
    Bench {
        #[arg(long, default_value_t = 2000)]
        frames: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
    /// Writes augmented versions of a clip directory.
    Augment {
        clip_dir: PathBuf,
        /// Augmentation settings JSON; missing fields take defaults.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Directory of frame_*.ppm images, scored by an untrained toy classifier.
    #[arg(long, conflicts_with_all = ["features_dir", "mock_frames"])]
    frames_dir: Option<PathBuf>,
    /// Directory of win_NNNNNN.{phi,conf}.isvt files.
    #[arg(long, conflicts_with = "mock_frames")]
    features_dir: Option<PathBuf>,
    /// Synthetic stream of this many frames scored by the mock extractor.
    #[arg(long)]
    mock_frames: Option<usize>,
    /// Saved generator weights; random initial weights otherwise.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// One gloss per line.
    #[arg(long)]
    vocab: Option<PathBuf>,
}

/// Configuration without validation, for commands that only read part of it.
fn load_config_unchecked(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg: PipelineConfig = match &cli.config {
        Some(p) => read_json(Some(p))?,
        None => match cli.preset {
            Preset::Full => PipelineConfig::default(),
            Preset::Toy => PipelineConfig::toy(),
        },
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let cfg = load_config_unchecked(cli)?;
    cfg.validate()?;
    Ok(cfg)
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            Ok(serde_json::from_str(&text)?)
        }
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn make_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn run(cli: &Cli, args: &RunArgs) -> Result<()> {
    let cfg = load_config(cli)?;
    let weights = match &args.weights {
        Some(dir) => GeneratorWeights::load(dir)?,
        None => GeneratorWeights::init(&cfg.generator, cfg.seed)?,
    };
    let w = cfg.window_size;
    let run: PipelineRun = if let Some(dir) = &args.frames_dir {
        let clip = Clip::read_dir(dir, 25.0)?;
        let frames: Vec<Tensor> = clip.frame_list().iter().map(|f| f.map(|v| v / 127.5 - 1.0)).collect();
        let model = ToyClassifier::init(4, cfg.feature_dim, cfg.class_count, cfg.seed);
        run_batch(&frames, ToyExtractor::new(model).with_window_len(w), &weights, &cfg)?
    } else if let Some(dir) = &args.features_dir {
        let ext = FileBackedExtractor::new(dir).with_window_len(w);
        let last = ext.last_position()?.unwrap_or(0);
        let frames = if last == 0 { 0 } else { last + w - 1 };
        run_batch(&vec![(); frames], ext, &weights, &cfg)?
    } else {
        let n = args.mock_frames.unwrap_or(10 * w);
        let ext = MockExtractor::new(cfg.seed, cfg.feature_dim, cfg.class_count).with_window_len(w);
        run_batch(&vec![(); n], ext, &weights, &cfg)?
    };
    let vocab = args.vocab.as_ref().map(GlossVocab::from_file).transpose()?;
    make_out_dir(&cli.out_dir)?;
    let wav = cli.out_dir.join("speech.wav");
    run.audio.write_wav(&wav)?;
    write_detections_json(cli.out_dir.join("detections.json"), &run.detections, vocab.as_ref())?;
    write_json(&cli.out_dir.join("timing.json"), &run.timing)?;
    println!(
        "{} detections, {:.2}s of audio -> {}",
        run.detections.len(),
        run.audio.duration_secs(),
        wav.display()
    );
    Ok(())
}

fn synth(cli: &Cli, input: &Path) -> Result<()> {
    let spec = if sidecar_path(input).exists() {
        ComplexSpectrogram::read(input)?
    } else {
        let cfg = load_config(cli)?;
        let t = Tensor::read(input)?;
        let side = ComplexSpectrogram::zeros(cfg.n_fft / 2 + 1, 1, cfg.sample_rate, cfg.n_fft, cfg.hop)?.sidecar();
        ComplexSpectrogram::from_tensor(&t, &side)?
    };
    let stft = signvox::dsp::StftConfig {
        n_fft: spec.n_fft,
        hop: spec.hop,
    };
    let audio = istft(&spec, &stft)?;
    make_out_dir(&cli.out_dir)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("synth");
    let out = cli.out_dir.join(format!("{stem}.wav"));
    audio.write_wav(&out)?;
    println!("{} samples -> {}", audio.len(), out.display());
    Ok(())
}

fn metrics(reference: &Path, test: &Path) -> Result<()> {
    let ext = |p: &Path| p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let json = match ext(reference).as_deref() {
        Some("wav") => serde_json::to_string_pretty(&audio_report(
            &AudioBuffer::read_wav(reference)?,
            &AudioBuffer::read_wav(test)?,
        )?)?,
        Some("isvt") => serde_json::to_string_pretty(&tensor_report(&Tensor::read(reference)?, &Tensor::read(test)?)?)?,
        _ => {
            let read = |p: &Path| fs::read_to_string(p).map_err(|e| io_err(p, e));
            let (r, t) = (read(reference)?, read(test)?);
            let (rl, tl): (Vec<&str>, Vec<&str>) = (r.lines().collect(), t.lines().collect());
            if rl.len() != tl.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} reference lines, {} hypothesis lines",
                    rl.len(),
                    tl.len()
                )));
            }
            let pairs: Vec<TranscriptPair> = rl
                .iter()
                .zip(&tl)
                .filter(|(r, _)| !r.trim().is_empty())
                .map(|(r, h)| TranscriptPair::from_text(r, h))
                .collect();
            serde_json::to_string_pretty(&transcript_report(&pairs)?)?
        }
    };
    println!("{json}");
    Ok(())
}

fn tone_fixture(cfg: &PipelineConfig, feature_dim: usize) -> ToneFixture {
    ToneFixture {
        classes: cfg.class_count.min(8),
        feature_dim,
        frames: cfg.generator.output_frames,
        stft: cfg.stft(),
        sample_rate: cfg.sample_rate,
        noise: 0.1,
        seed: cfg.seed,
    }
}

fn train_specgen_cmd(cli: &Cli, samples: usize, iterations: usize, train_cfg: Option<&Path>) -> Result<()> {
    let cfg = load_config(cli)?;
    let mut tc: SpecgenTrainConfig = read_json(train_cfg)?;
    tc.max_iterations = Some(iterations);
    tc.seed = cfg.seed;
    let data = tone_fixture(&cfg, cfg.feature_dim).specgen(samples)?;
    let mut weights = GeneratorWeights::init(&cfg.generator, cfg.seed)?;
    let before = specgen_eval_loss(&weights, &data, &tc.loss)?;
    let history = train_specgen(&mut weights, &data, &[], &tc)?;
    let after = specgen_eval_loss(&weights, &data, &tc.loss)?;
    make_out_dir(&cli.out_dir)?;
    weights.save(cli.out_dir.join("generator"))?;
    history.write_json(cli.out_dir.join("history.json"))?;
    println!("training loss {before:.4} -> {after:.4} over {} iterations", history.step_losses.len());
    Ok(())
}

fn train_combined_cmd(cli: &Cli, samples: usize, steps: usize, train_cfg: Option<&Path>) -> Result<()> {
    let cfg = load_config(cli)?;
    let mut tc: CombinedTrainConfig = read_json(train_cfg)?;
    tc.max_steps = Some(steps);
    tc.seed = cfg.seed;
    let mut classifier = ToyClassifier::<f32>::init(2, cfg.feature_dim, cfg.class_count, cfg.seed);
    let mut generator = GeneratorWeights::init(&cfg.generator, cfg.seed)?;
    let data = tone_fixture(&cfg, classifier.input_dim()).combined(samples)?;
    let before = combined_eval_loss(&classifier, &generator, &data, &tc.loss)?;
    let history = train_combined(&mut classifier, &mut generator, &data, &[], &tc)?;
    let after = combined_eval_loss(&classifier, &generator, &data, &tc.loss)?;
    make_out_dir(&cli.out_dir)?;
    generator.save(cli.out_dir.join("generator"))?;
    history.write_json(cli.out_dir.join("history.json"))?;
    println!("combined loss {before:.4} -> {after:.4} over {} steps", history.step_losses.len());
    Ok(())
}

/// Scores as a JSON array or whitespace-separated numbers.
fn read_scores(path: &Path) -> Result<Vec<f32>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.trim_start().starts_with('[') {
        return Ok(serde_json::from_str(&text)?);
    }
    text.split_whitespace()
        .map(|t| {
            t.parse::<f32>()
                .map_err(|_| Error::InvalidInput(format!("not a number: {t:?}")))
        })
        .collect()
}

fn nms_sim(cli: &Cli, scores: &Path, no_flush: bool) -> Result<()> {
    let cfg = load_config_unchecked(cli)?;
    let emissions = simulate_scores(&read_scores(scores)?, cfg.nms_params(), !no_flush)?;
    println!("{}", serde_json::to_string_pretty(&emissions)?);
    Ok(())
}

fn bench(cli: &Cli, frames: usize, reps: usize) -> Result<()> {
    let cfg = load_config(cli)?;
    let weights = GeneratorWeights::init(&cfg.generator, cfg.seed)?;
    let report = benchmark_throughput(frames, &weights, &cfg, reps)?;
    make_out_dir(&cli.out_dir)?;
    write_json(&cli.out_dir.join("bench.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn augment(cli: &Cli, clip_dir: &Path, params: Option<&Path>) -> Result<()> {
    let mut p: AugmentParams = read_json(params)?;
    if let Some(s) = cli.seed {
        p.seed = s;
    }
    p.validate()?;
    let clip = Clip::read_dir(clip_dir, 25.0)?;
    for v in 0..p.versions {
        let dir = cli.out_dir.join(format!("version_{v}"));
        augment_clip(&clip, &p, v)?.write_dir(&dir)?;
        println!("{}", dir.display());
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => run(cli, args),
        Command::Synth { input } => synth(cli, input),
        Command::Metrics { reference, test } => metrics(reference, test),
        Command::TrainSpecgen {
            samples,
            iterations,
            train_config,
        } => train_specgen_cmd(cli, *samples, *iterations, train_config.as_deref()),
        Command::TrainCombined {
            samples,
            steps,
            train_config,
        } => train_combined_cmd(cli, *samples, *steps, train_config.as_deref()),
        Command::NmsSim { scores, no_flush } => nms_sim(cli, scores, *no_flush),
        Command::Bench { frames, reps } => bench(cli, *frames, *reps),
        Command::Augment { clip_dir, params } => augment(cli, clip_dir, params.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
