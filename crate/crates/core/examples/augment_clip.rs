//! Colour, rotation and frame-drop augmentation of a synthetic clip, in
//! both orders relative to preprocessing.

use signvox::ingest::{augment_clip, augment_then_preprocess, preprocess_then_augment, AugmentParams, Clip};
use signvox::Tensor;

fn main() -> signvox::Result<()> {
    let (w, h, t) = (48, 40, 24);
    let frames: Vec<Tensor> = (0..t)
        .map(|f| {
            let mut data = Vec::with_capacity(3 * w * h);
            for c in 0..3 {
                for x in 0..w {
                    for y in 0..h {
                        data.push(((x * 5 + y * 3 + f * 7 + c * 60) % 256) as f32);
                    }
                }
            }
            Tensor::new(vec![3, w, h], data)
        })
        .collect::<signvox::Result<_>>()?;
    let clip = Clip::from_frames(&frames, 25.0, false)?;
    let params = AugmentParams { versions: 3, seed: 7, ..Default::default() };
    let mean = |c: &Clip| c.frames.data().iter().map(|&v| v as f64).sum::<f64>() / c.frames.len() as f64;
    println!("source: {} frames, mean pixel {:.2}", clip.len(), mean(&clip));
    for v in 0..params.versions {
        let a = augment_clip(&clip, &params, v)?;
        println!("version {v}: {} frames, mean pixel {:.2}", a.len(), mean(&a));
    }
    let a = augment_then_preprocess(&clip, &params, 0)?;
    let b = preprocess_then_augment(&clip, &params, 0)?;
    println!("augment then preprocess: {:?}", a.frames.shape());
    println!("preprocess then augment: {:?}", b.frames.shape());
    Ok(())
}
