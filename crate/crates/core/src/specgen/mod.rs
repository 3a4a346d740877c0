//! Feature-to-spectrogram generator with hand-written forward and backward
//! passes, and the spectrogram losses used to train it.

mod forward;
mod layers;
mod loss;
mod params;
mod weights;

pub use forward::{generate_spectrogram, Generator, GeneratorOutput, GeneratorTrace, Mode};
pub use loss::{
    combined_loss, complex_loss_with_grad, complex_spectrogram_loss, spectral_convergence, LossBreakdown,
    LossWeights, MAG_EPS,
};
pub use params::{DeconvSpec, GeneratorParams};
pub use weights::{Branch, DeconvBlock, GeneratorWeights, MlpStage, MANIFEST_FILE};
