//! Experiment configuration: one JSON document with the sections
//! `scene`, `transfer`, `dataset`, `split`, `network` and `train`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetConfig, GenerationConfig};
use crate::error::Result;
use crate::forward::ForwardConfig;
use crate::nn::NetworkConfig;
use crate::scene::{SceneConfig, SplitSpec};
use crate::train::TrainConfig;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scene: SceneConfig,
    pub transfer: ForwardConfig,
    pub dataset: DatasetConfig,
    pub split: SplitSpec,
    pub network: NetworkConfig,
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let c: Self = serde_json::from_slice(&std::fs::read(path)?)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.generation().validate()?;
        self.network.validate()?;
        self.train.validate()
    }

    pub fn generation(&self) -> GenerationConfig {
        GenerationConfig {
            scene: self.scene.clone(),
            transfer: self.transfer,
            dataset: self.dataset.clone(),
            split: self.split,
        }
    }
}
