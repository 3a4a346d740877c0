//! Acceptance suite. Runs every criterion, prints one pass/fail line each,
//! and fails if any criterion fails.
//!
//! cargo test --release --test acceptance -- --nocapture

mod common;

use std::io::Write;
use std::time::Instant;

use rand::Rng;
use signvox::audio::AudioBuffer;
use signvox::config::PipelineConfig;
use signvox::datasets::{ScriptedSigns, SignEvent, ToneFixture};
use signvox::dsp::{istft, stft, MelConfig, StftConfig};
use signvox::extractor::{cross_entropy, ConfidenceVector, ToyClassifier};
use signvox::metrics::{bleu, cer, levenshtein, mcd, mcd_with, mse_metric, snr, stoi, topk_accuracy, wer, TranscriptPair, SNR_CAP_DB};
use signvox::nms::NmsState;
use signvox::pipeline::{benchmark_throughput, run_batch, run_stream};
use signvox::scalar::ParamSet;
use signvox::specgen::{
    complex_loss_with_grad, complex_spectrogram_loss, spectral_convergence, GeneratorParams, GeneratorWeights,
    LossWeights, Mode,
};
use signvox::train::{
    combined_eval_loss, grad_check, specgen_eval_loss, train_combined, train_specgen, CombinedTrainConfig, Sgd,
    SgdConfig, SpecgenTrainConfig,
};
use signvox::{ComplexSpectrogram, Tensor};

use common::{random_scenario, reference_levenshtein, reference_mcd, reference_nms, rng, TableExtractor};

type Outcome = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

const STREAMS: usize = 10_000;

struct NmsCorpusSummary {
    secs: f64,
    emissions: usize,
    flushed: usize,
    mismatch: Option<String>,
    separation_violation: Option<String>,
    threshold_violation: Option<String>,
}

/// Runs the randomized corpus once; the equivalence and separation
/// criteria both read from it.
fn nms_corpus() -> NmsCorpusSummary {
    let mut r = rng(0x4e4d53);
    let mut summary = NmsCorpusSummary {
        secs: 0.0,
        emissions: 0,
        flushed: 0,
        mismatch: None,
        separation_violation: None,
        threshold_violation: None,
    };
    let start = Instant::now();
    for stream in 0..STREAMS {
        let sc = random_scenario(&mut r);
        let p = sc.params;
        let expected = reference_nms(&p, sc.frames, &sc.table);

        let mut ex = TableExtractor::new(sc.table.clone(), p.window);
        let mut state = NmsState::new(p).unwrap();
        let mut got = Vec::new();
        let mut failure = None;
        for frame in 0..sc.frames {
            match state.push(frame, &mut ex) {
                Ok(Some(d)) => got.push(d),
                Ok(None) => {}
                Err(e) => {
                    failure = Some(format!("stream {stream}: extractor error {e}"));
                    break;
                }
            }
        }
        if let Some(d) = state.flush() {
            summary.flushed += 1;
            got.push(d);
        }
        summary.emissions += got.len();

        if summary.mismatch.is_none() {
            let evaluated: Vec<usize> = (1..=sc.table.len()).filter(|t| *t == 1 || (t - 1) % p.hop == 0).collect();
            let same = got.len() == expected.len()
                && got.iter().zip(&expected).all(|(g, e)| {
                    g.emitted_at == e.position
                        && g.feature.values() == e.feature.as_slice()
                        && g.confidence.values() == e.confidence.as_slice()
                });
            if let Some(f) = failure {
                summary.mismatch = Some(f);
            } else if ex.calls != evaluated {
                summary.mismatch = Some(format!("stream {stream}: extractor visited {:?}", ex.calls));
            } else if !same {
                summary.mismatch = Some(format!(
                    "stream {stream} {p:?}: got {:?}, expected {:?}",
                    got.iter().map(|d| d.emitted_at).collect::<Vec<_>>(),
                    expected.iter().map(|e| e.position).collect::<Vec<_>>()
                ));
            }
        }
        for pair in got.windows(2) {
            if pair[1].emitted_at - pair[0].emitted_at <= p.separation() && summary.separation_violation.is_none() {
                summary.separation_violation = Some(format!(
                    "stream {stream}: positions {} and {} with w - o = {}",
                    pair[0].emitted_at,
                    pair[1].emitted_at,
                    p.separation()
                ));
            }
        }
        if let Some(d) = got.iter().find(|d| d.max_confidence() < p.threshold) {
            summary.threshold_violation.get_or_insert(format!(
                "stream {stream}: emission at {} scored {} below {}",
                d.emitted_at,
                d.max_confidence(),
                p.threshold
            ));
        }
    }
    summary.secs = start.elapsed().as_secs_f64();
    summary
}

fn nms_equivalence(s: &NmsCorpusSummary) -> Outcome {
    if let Some(m) = &s.mismatch {
        return Err(m.clone());
    }
    ensure(s.secs < 60.0, || format!("corpus took {:.1}s", s.secs))?;
    Ok(format!(
        "{STREAMS} streams, {} emissions ({} flushed) identical to the reference, {:.2}s",
        s.emissions, s.flushed, s.secs
    ))
}

fn nms_separation(s: &NmsCorpusSummary) -> Outcome {
    if let Some(m) = s.separation_violation.as_ref().or(s.threshold_violation.as_ref()) {
        return Err(m.clone());
    }
    Ok(format!("{} emissions separated by more than w - o and at or above threshold", s.emissions))
}

fn interior_snr_db(x: &[f32], y: &[f32], margin: usize) -> f64 {
    let n = x.len().min(y.len());
    let (mut sig, mut err) = (0.0f64, 0.0f64);
    for i in margin..n - margin {
        sig += (x[i] as f64).powi(2);
        err += (x[i] as f64 - y[i] as f64).powi(2);
    }
    10.0 * (sig / err.max(f64::MIN_POSITIVE)).log10()
}

fn stft_round_trip() -> Outcome {
    let cfg = StftConfig { n_fft: 2048, hop: 512 };
    let mut r = rng(0x5746);
    let mut worst = f64::INFINITY;
    for i in 0..100 {
        let len = r.gen_range(22050..=3 * 22050);
        let x = common::noise(&mut r, len, 1.0, 22050);
        let y = istft(&stft(&x, &cfg).map_err(|e| e.to_string())?, &cfg).map_err(|e| e.to_string())?;
        let db = interior_snr_db(&x.samples, &y.samples, cfg.n_fft);
        ensure(db >= 60.0, || format!("signal {i} ({len} samples): {db:.1} dB"))?;
        worst = worst.min(db);
    }
    Ok(format!("100 signals, worst interior SNR {worst:.1} dB"))
}

fn outward(r: &mut rand_chacha::ChaCha8Rng, pred: &[f64]) -> Vec<f64> {
    pred.iter()
        .map(|&p| p + if p < 0.0 { -1.0 } else { 1.0 } * r.gen_range(0.1..0.2))
        .collect()
}

fn gradient_checks() -> Outcome {
    let e = |e: signvox::Error| e.to_string();
    let mut r = rng(0);
    let params = GeneratorParams::toy(8, 9, 4);
    let mut weights = GeneratorWeights::<f64>::init(&params, 0).map_err(e)?;
    let jittered: Vec<f64> = weights.flatten().iter().map(|v| v + r.gen_range(-0.1..0.1)).collect();
    weights.load_flat(&jittered).map_err(e)?;
    let phi: Vec<f64> = (0..8).map(|_| r.gen_range(-1.0..1.0)).collect();
    let loss_w = LossWeights { mse: 0.5, ..Default::default() };
    let mode = Mode::Train { seed: 0 };
    let (out, trace) = weights.forward_traced(&phi, mode).map_err(e)?;
    let target_r = outward(&mut r, &out.real);
    let target_i = outward(&mut r, &out.imag);
    let (_, gr, gi) = complex_loss_with_grad(&target_r, &target_i, &out.real, &out.imag, &loss_w).map_err(e)?;
    let (grads, _) = weights.backward(&trace, &gr, &gi).map_err(e)?;
    let loss = |w: &GeneratorWeights<f64>| {
        let o = w.forward(&phi, mode)?;
        Ok(complex_loss_with_grad(&target_r, &target_i, &o.real, &o.imag, &loss_w)?.0.total)
    };
    let gen = grad_check(&weights, &grads, loss).map_err(e)?;

    let mut corrupted = grads.clone();
    let mut flat = corrupted.flatten();
    flat[0] *= 1.01;
    corrupted.load_flat(&flat).map_err(e)?;
    let bad = grad_check(&weights, &corrupted, loss).map_err(e)?;

    let classifier = ToyClassifier::<f64>::init(2, 8, 5, 0);
    let input: Vec<f64> = (0..classifier.input_dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
    let (_, cgrads) = classifier.loss_and_grad(&input, 3).map_err(e)?;
    let cls = grad_check(&classifier, &cgrads, |c: &ToyClassifier<f64>| cross_entropy(&c.forward(&input)?.logits, 3))
        .map_err(e)?;

    let detail = format!(
        "generator {} params max rel {:.2e} at {:?}; classifier {} params max rel {:.2e}; corrupted control {:.2e}",
        gen.checked, gen.max_rel_error, gen.worst, cls.checked, cls.max_rel_error, bad.max_rel_error
    );
    ensure(gen.passes(1e-6) && cls.passes(1e-6) && !bad.passes(1e-6), || detail.clone())?;
    Ok(detail)
}

fn loss_identities() -> Outcome {
    let e = |e: signvox::Error| e.to_string();
    let x = common::noise(&mut rng(5), 4000, 0.5, 16000);
    let s = stft(&x, &StftConfig { n_fft: 256, hop: 64 }).map_err(e)?;
    let self_loss = complex_spectrogram_loss(&s, &s, &LossWeights { mse: 0.3, ..Default::default() }).map_err(e)?;
    let m = s.magnitude();
    let self_sc = spectral_convergence(&m, &m).map_err(e)?;
    ensure(self_loss.total == 0.0 && self_sc == 0.0, || {
        format!("self loss {} and self sc {}", self_loss.total, self_sc)
    })?;

    let plane = |v: f32| Tensor::new(vec![1, 1], vec![v]).unwrap();
    let truth = ComplexSpectrogram::new(plane(3.0), plane(4.0), 16000, 0, 1).map_err(e)?;
    let zero = ComplexSpectrogram::new(plane(0.0), plane(0.0), 16000, 0, 1).map_err(e)?;
    let w = LossWeights { sc: 0.5, mse: 0.0, ..Default::default() };
    let one = complex_spectrogram_loss(&truth, &zero, &w).map_err(e)?.total;
    ensure((one - 25.0).abs() <= 1e-6, || format!("1x1 case gave {one}"))?;
    Ok(format!("self loss 0, self sc 0, 1x1 case {one:.9}"))
}

/// Accumulated update versus one step on the pre-summed gradient.
fn accumulate_matches<P: ParamSet<f32> + Clone>(start: &P, batches: &[P]) -> std::result::Result<bool, String> {
    let e = |e: signvox::Error| e.to_string();
    let cfg = SgdConfig {
        lr: 0.05,
        momentum: 0.0,
        weight_decay: 0.0,
        accumulation: batches.len(),
    };
    let mut accumulated = start.clone();
    Sgd::new(cfg).map_err(e)?.accumulate_step(&mut accumulated, batches).map_err(e)?;

    let mut sum = vec![0.0f32; start.param_count()];
    for b in batches {
        for (s, g) in sum.iter_mut().zip(b.flatten()) {
            *s += g;
        }
    }
    let mut summed = start.clone();
    summed.load_flat(&sum).map_err(e)?;
    let mut single = start.clone();
    Sgd::new(SgdConfig { accumulation: 1, ..cfg })
        .map_err(e)?
        .accumulate_step(&mut single, &[summed])
        .map_err(e)?;
    let bits = |p: &P| p.flatten().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    Ok(bits(&accumulated) == bits(&single))
}

fn accumulation_equivalence() -> Outcome {
    let e = |e: signvox::Error| e.to_string();
    let mut r = rng(6);
    let classifier = ToyClassifier::<f32>::init(2, 8, 5, 1);
    let batches: Vec<_> = (0..4)
        .map(|i| {
            let input: Vec<f32> = (0..classifier.input_dim()).map(|_| r.gen_range(-1.0..1.0)).collect();
            classifier.loss_and_grad(&input, i % 5).map(|(_, g)| g)
        })
        .collect::<signvox::Result<_>>()
        .map_err(e)?;
    ensure(accumulate_matches(&classifier, &batches)?, || "classifier update differs".into())?;

    let gen = GeneratorWeights::<f32>::init(&GeneratorParams::toy(8, 9, 4), 2).map_err(e)?;
    let gen_batches: Vec<_> = (0..3)
        .map(|_| {
            let mut g = gen.clone();
            let flat: Vec<f32> = (0..g.param_count()).map(|_| r.gen_range(-1.0..1.0)).collect();
            g.load_flat(&flat).map(|_| g)
        })
        .collect::<signvox::Result<_>>()
        .map_err(e)?;
    ensure(accumulate_matches(&gen, &gen_batches)?, || "generator update differs".into())?;
    Ok("4-batch classifier and 3-batch generator updates bit-identical".into())
}

fn training_smoke() -> Outcome {
    let e = |e: signvox::Error| e.to_string();
    let fixture = ToneFixture {
        classes: 4,
        feature_dim: 32,
        frames: 10,
        stft: StftConfig { n_fft: 64, hop: 16 },
        sample_rate: 16000,
        noise: 0.1,
        seed: 0,
    };
    let data = fixture.specgen(64).map_err(e)?;
    let mut weights = GeneratorWeights::init(&GeneratorParams::toy(32, 33, 10), 0).map_err(e)?;
    let cfg = SpecgenTrainConfig {
        max_iterations: Some(200),
        max_epochs: 200,
        early_stop_patience: None,
        ..Default::default()
    };
    let before = specgen_eval_loss(&weights, &data, &cfg.loss).map_err(e)?;
    let start = Instant::now();
    let history = train_specgen(&mut weights, &data, &[], &cfg).map_err(e)?;
    let spec_secs = start.elapsed().as_secs_f64();
    let after = specgen_eval_loss(&weights, &data, &cfg.loss).map_err(e)?;
    let drop = 1.0 - after / before;
    let spec_detail = format!(
        "generator {before:.3} -> {after:.3} ({:.1}% lower, {} iterations, {spec_secs:.1}s)",
        100.0 * drop,
        history.step_losses.len()
    );
    ensure(history.step_losses.len() <= 200 && drop >= 0.5 && spec_secs < 120.0, || spec_detail.clone())?;

    let mut classifier = ToyClassifier::<f32>::init(2, 32, 4, 0);
    let mut generator = GeneratorWeights::init(&GeneratorParams::toy(32, 33, 10), 0).map_err(e)?;
    let cdata = ToneFixture {
        feature_dim: classifier.input_dim(),
        ..fixture
    }
    .combined(64)
    .map_err(e)?;
    let ccfg = CombinedTrainConfig {
        max_steps: Some(100),
        early_stop_patience: None,
        ..Default::default()
    };
    let cbefore = combined_eval_loss(&classifier, &generator, &cdata, &ccfg.loss).map_err(e)?;
    let start = Instant::now();
    let chistory = train_combined(&mut classifier, &mut generator, &cdata, &[], &ccfg).map_err(e)?;
    let comb_secs = start.elapsed().as_secs_f64();
    let cafter = combined_eval_loss(&classifier, &generator, &cdata, &ccfg.loss).map_err(e)?;
    let detail = format!(
        "{spec_detail}; combined {cbefore:.3} -> {cafter:.3} ({} steps, {comb_secs:.1}s)",
        chistory.step_losses.len()
    );
    ensure(chistory.step_losses.len() <= 100 && cafter < cbefore && comb_secs < 120.0, || detail.clone())?;
    Ok(detail)
}

fn speech_like(len: usize, rate: u32) -> AudioBuffer {
    let tau = std::f64::consts::TAU;
    AudioBuffer::new(
        (0..len)
            .map(|i| {
                let t = i as f64 / rate as f64;
                let env = 0.5 + 0.5 * (tau * 3.0 * t).sin();
                (env * ((tau * 220.0 * t).sin() + 0.5 * (tau * 1100.0 * t).sin() + 0.3 * (tau * 2500.0 * t).sin()))
                    as f32
            })
            .collect(),
        rate,
    )
}

fn metric_suite() -> Outcome {
    let e = |e: signvox::Error| e.to_string();
    let mut r = rng(8);
    let x = speech_like(32000, 16000);

    let cap = snr(&x, &x).map_err(e)?;
    let zero_db = snr(&x, &AudioBuffer::silence(x.len(), x.sample_rate)).map_err(e)?;
    let scaled = AudioBuffer::new(x.samples.iter().map(|v| v * 1.1).collect(), x.sample_rate);
    let twenty = snr(&x, &scaled).map_err(e)?;
    ensure(cap == SNR_CAP_DB && zero_db.abs() < 1e-9 && (twenty - 20.0).abs() < 1e-4, || {
        format!("snr cap {cap}, silence {zero_db}, 10% residual {twenty}")
    })?;

    let t = Tensor::from_vec(x.samples.clone());
    ensure(mse_metric(&t, &t).map_err(e)? == 0.0, || "mse(x, x) != 0".into())?;
    let p = TranscriptPair::from_text("the cat sat on the mat", "the cat sat on the mat");
    let (w, c, b) = (wer(&p).map_err(e)?, cer(&p).map_err(e)?, bleu(&p).map_err(e)?);
    ensure(w == 0.0 && c == 0.0 && (b - 1.0).abs() < 1e-12, || format!("identity wer {w} cer {c} bleu {b}"))?;

    let s = stoi(&x, &x).map_err(e)?;
    ensure(s >= 0.99, || format!("stoi(x, x) = {s}"))?;

    let y = AudioBuffer::new(
        x.samples.iter().map(|v| v + r.gen_range(-0.2f32..0.2)).collect(),
        x.sample_rate,
    );
    let self_mcd = mcd(&x, &x).map_err(e)?;
    let (ab, ba) = (mcd(&x, &y).map_err(e)?, mcd(&y, &x).map_err(e)?);
    let oracle = reference_mcd(&x, &y, &MelConfig::default());
    let other = MelConfig {
        stft: StftConfig { n_fft: 512, hop: 128 },
        n_mels: 24,
        ..MelConfig::default()
    };
    let (with, oracle_with) = (mcd_with(&x, &y, &other).map_err(e)?, reference_mcd(&x, &y, &other));
    ensure(
        self_mcd == 0.0 && ab == ba && (ab - oracle).abs() < 1e-6 && (with - oracle_with).abs() < 1e-6,
        || format!("mcd self {self_mcd}, a-b {ab}, b-a {ba}, reference {oracle}, alt config {with} vs {oracle_with}"),
    )?;

    let confs: Vec<ConfidenceVector> = (0..200)
        .map(|_| ConfidenceVector::new((0..10).map(|_| (r.gen_range(0..=8) as f32) / 8.0).collect()))
        .collect::<signvox::Result<_>>()
        .map_err(e)?;
    let labels: Vec<usize> = (0..200).map(|_| r.gen_range(0..10)).collect();
    let accs: Vec<f64> = (1..=10).map(|k| topk_accuracy(&confs, &labels, k)).collect::<signvox::Result<_>>().map_err(e)?;
    ensure(accs.windows(2).all(|p| p[0] <= p[1]) && accs[9] == 1.0, || format!("top-k {accs:?}"))?;

    for i in 0..1000 {
        let la = r.gen_range(0..=12);
        let lb = r.gen_range(0..=12);
        let a: Vec<u8> = (0..la).map(|_| r.gen_range(b'a'..=b'd')).collect();
        let b: Vec<u8> = (0..lb).map(|_| r.gen_range(b'a'..=b'd')).collect();
        let (got, want) = (levenshtein(&a, &b), reference_levenshtein(&a, &b));
        ensure(got == want, || format!("pair {i}: {a:?} vs {b:?} gave {got}, reference {want}"))?;
    }
    Ok(format!(
        "snr {cap}/{zero_db:.1}/{twenty:.3} dB, stoi(x, x) {s:.4}, mcd(x, y) {ab:.4} dB, top-1..10 {:.3}..{:.3}, 1000 edit distances agree",
        accs[0], accs[9]
    ))
}

fn pipeline_composition() -> Outcome {
    let e = |e: signvox::Error| e.to_string();
    let defaults = PipelineConfig::default();
    ensure(
        defaults.window_size == 50 && defaults.hop_length == 3 && defaults.confidence_threshold == 0.7,
        || format!("defaults {defaults:?}"),
    )?;

    let cfg = PipelineConfig::toy();
    let weights = GeneratorWeights::init(&cfg.generator, 0).map_err(e)?;
    let classes = [2, 7, 4];
    let signs = [20, 90, 160]
        .iter()
        .zip(classes)
        .map(|(&centre, class)| SignEvent { centre, class, peak: 0.95 })
        .collect();
    let script = ScriptedSigns::new(signs, 10, 0.3, cfg.class_count, cfg.feature_dim, 1).map_err(e)?;
    let frames = vec![(); 200 + cfg.window_size - 1];

    let streamed = run_stream(frames.iter().copied(), script.clone(), &weights, &cfg).map_err(e)?;
    let batched = run_batch(&frames, script, &weights, &cfg).map_err(e)?;
    let found: Vec<usize> = streamed.detections.iter().map(|d| d.predicted_class).collect();
    ensure(found == classes, || format!("detected classes {found:?}"))?;
    let tau = cfg.generator.output_frames;
    let expected_len = 3 * ((tau - 1) * cfg.hop + cfg.n_fft);
    ensure(streamed.audio.len() == expected_len, || {
        format!("audio {} samples, expected {expected_len}", streamed.audio.len())
    })?;
    let bits = |a: &AudioBuffer| a.samples.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    ensure(streamed == batched && bits(&streamed.audio) == bits(&batched.audio), || {
        "streaming and batch runs differ".into()
    })?;
    Ok(format!(
        "3 detections at {:?}, {expected_len} samples, streaming == batch, defaults 50/3/0.7",
        streamed.detections.iter().map(|d| d.emitted_at).collect::<Vec<_>>()
    ))
}

fn benchmark() -> Outcome {
    let e = |e: signvox::Error| e.to_string();
    let cfg = PipelineConfig::toy();
    let weights = GeneratorWeights::init(&cfg.generator, 0).map_err(e)?;
    let report = benchmark_throughput(2000, &weights, &cfg, 3).map_err(e)?;
    let detail = format!(
        "{} runs, fps median {:.0} (min {:.0}, max {:.0}), {:.0} windows/s",
        report.repetitions, report.median_fps, report.min_fps, report.max_fps, report.windows_per_sec
    );
    ensure(
        report.repetitions >= 3
            && report.min_fps <= report.median_fps
            && report.median_fps <= report.max_fps
            && report.windows_per_sec >= 200.0,
        || detail.clone(),
    )?;
    Ok(detail)
}

#[test]
fn acceptance() {
    let corpus = nms_corpus();
    let results: Vec<(&str, Outcome)> = vec![
        ("suppression matches reference", nms_equivalence(&corpus)),
        ("suppression separation", nms_separation(&corpus)),
        ("stft round trip", stft_round_trip()),
        ("gradient checks", gradient_checks()),
        ("loss identities", loss_identities()),
        ("accumulated update", accumulation_equivalence()),
        ("training smoke", training_smoke()),
        ("metric suite", metric_suite()),
        ("pipeline composition", pipeline_composition()),
        ("benchmark", benchmark()),
    ];
    // Written to the raw handle so the lines show up even when the harness
    // captures output of passing tests.
    let mut err = std::io::stderr().lock();
    let mut failed = Vec::new();
    for (i, (name, outcome)) in results.iter().enumerate() {
        let line = match outcome {
            Ok(detail) => format!("criterion {} {name}: PASS: {detail}", i + 1),
            Err(detail) => {
                failed.push(i + 1);
                format!("criterion {} {name}: FAIL: {detail}", i + 1)
            }
        };
        writeln!(err, "{line}").unwrap();
    }
    drop(err);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
