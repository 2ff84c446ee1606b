//! Synthetic SAR image formation and restoration workbench.

pub mod apodization;
pub mod dataset;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod nn;
pub mod scalar;
pub mod scene;
pub mod spectral;
pub mod train;
pub mod window;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid32 = grid::Grid<f32>;
pub type Grid64 = grid::Grid<f64>;
pub type ComplexImage32 = grid::ComplexImage<f32>;
pub type ComplexImage64 = grid::ComplexImage<f64>;
pub type SampleTuple32 = forward::SampleTuple<f32>;
pub type SampleTuple64 = forward::SampleTuple<f64>;
pub type ModelParams32 = nn::ModelParams<f32>;
pub type ModelParams64 = nn::ModelParams<f64>;
