//! Supervised training: standardization, losses, optimizer, augmentation.

pub mod adam;
pub mod augment;
pub mod loss;
pub mod standardize;
pub mod trainer;

pub use adam::{adam_step, AdamParams, AdamState};
pub use augment::{augment, Dihedral};
pub use loss::Loss;
pub use standardize::{fit_standardization, ChannelStats, Standardization};
pub use trainer::{
    evaluate, evaluate_with, identity_estimate, initial_params, lr_schedule, predict, train,
    Checkpoint, EpochRecord, EvalReport, EvalRow, TrainConfig, TrainHistory,
};
