//! Optimizers, learning-rate schedules, early stopping, finite-difference
//! gradient checks, and the generator and joint training loops.

mod grad_check;
mod loops;
mod optim;
mod schedule;

pub use grad_check::{grad_check, grad_check_with_step, relative_error, GradCheckReport, FD_STEP};
pub use loops::{
    combined_eval_loss, specgen_eval_loss, train_combined, train_specgen, CombinedSample, CombinedTrainConfig,
    EpochRecord, SpecgenSample, SpecgenTrainConfig, TrainHistory,
};
pub use optim::{Adam, AdamConfig, Sgd, SgdConfig};
pub use schedule::{EarlyStop, Scheduler};
