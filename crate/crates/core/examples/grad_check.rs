//! Checks the hand-written generator and classifier gradients against
//! central finite differences in f64.
//!
//! The generator is checked at a generic point: initial weights are
//! jittered so no bias or gain sits exactly at zero, and each target lies
//! 0.1 to 0.2 further from zero than the prediction, keeping every
//! absolute-value term away from its kink.
//!
//! cargo run --release --example grad_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signvox::extractor::{cross_entropy, ToyClassifier};
use signvox::scalar::ParamSet;
use signvox::specgen::{complex_loss_with_grad, GeneratorParams, GeneratorWeights, LossWeights, Mode};
use signvox::train::{grad_check, grad_check_with_step, FD_STEP};

fn outward(rng: &mut ChaCha8Rng, pred: &[f64]) -> Vec<f64> {
    pred.iter()
        .map(|&p| p + if p < 0.0 { -1.0 } else { 1.0 } * rng.gen_range(0.1..0.2))
        .collect()
}

fn main() -> signvox::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = GeneratorParams::toy(8, 9, 4);
    let mut weights = GeneratorWeights::<f64>::init(&params, 0)?;
    let jittered: Vec<f64> = weights.flatten().iter().map(|v| v + rng.gen_range(-0.1..0.1)).collect();
    weights.load_flat(&jittered)?;
    let phi: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let loss_w = LossWeights { mse: 0.5, ..Default::default() };
    let mode = Mode::Train { seed: 0 };

    let (out, trace) = weights.forward_traced(&phi, mode)?;
    let target_r = outward(&mut rng, &out.real);
    let target_i = outward(&mut rng, &out.imag);
    let (_, gr, gi) = complex_loss_with_grad(&target_r, &target_i, &out.real, &out.imag, &loss_w)?;
    let (grads, _) = weights.backward(&trace, &gr, &gi)?;
    let loss = |w: &GeneratorWeights<f64>| {
        let o = w.forward(&phi, mode)?;
        Ok(complex_loss_with_grad(&target_r, &target_i, &o.real, &o.imag, &loss_w)?.0.total)
    };
    for step in [FD_STEP, 1e-4, 1e-3] {
        let r = grad_check_with_step(&weights, &grads, loss, step)?;
        println!(
            "generator, step {step:.0e}: {} parameters, max relative error {:.3e} at {:?} (analytic {:.6e}, numeric {:.6e})",
            r.checked, r.max_rel_error, r.worst, r.worst_analytic, r.worst_numeric
        );
    }

    let mut corrupted = grads.clone();
    let mut flat = corrupted.flatten();
    flat[0] *= 1.01;
    corrupted.load_flat(&flat)?;
    let bad = grad_check(&weights, &corrupted, loss)?;
    println!("generator with one gradient scaled by 1.01: max relative error {:.3e}", bad.max_rel_error);

    let classifier = ToyClassifier::<f64>::init(2, 8, 5, 0);
    let input: Vec<f64> = (0..classifier.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (_, cgrads) = classifier.loss_and_grad(&input, 3)?;
    let report = grad_check(&classifier, &cgrads, |c: &ToyClassifier<f64>| {
        cross_entropy(&c.forward(&input)?.logits, 3)
    })?;
    println!("classifier: {} parameters, max relative error {:.3e}", report.checked, report.max_rel_error);
    Ok(())
}
