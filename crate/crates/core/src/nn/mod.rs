//! Compact encoder-decoder restoration network with squeeze-excitation and
//! metadata conditioning, plus its reverse-mode gradients.

pub mod config;
pub mod gradcheck;
pub mod input;
pub mod network;
pub mod ops;
pub mod params;

pub use config::{NetworkConfig, Variant};
pub use gradcheck::{gradient_check, micro_config, GradCheckReport};
pub use input::{build_input, InputStack};
pub use network::{backward, forward, ActivationCache, Gradients};
pub use ops::FeatureMap;
pub use params::{layout, ModelParams, ParamSpec, ParamTensor};
