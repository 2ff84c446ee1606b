//! On-disk formats.

pub mod checkpoint;
pub mod config;
pub mod manifest;
pub mod preview;
pub mod sample_file;
pub mod tables;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use config::ExperimentConfig;
pub use manifest::{load_samples, read_manifest, write_dataset, DatasetManifest, SampleRecord};
pub use sample_file::{read_sample, write_sample, SampleImages};
