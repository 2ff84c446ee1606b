//! Seeded generation of (x, z, y, m) tuples and their split assignment.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{derive_seed, simulate_tuple, ForwardConfig, SampleTuple};
use crate::scene::{
    assign_split, generate_scene, sample_metadata, AcquisitionMetadata, MetadataRanges,
    SceneConfig, Split, SplitSpec,
};

const METADATA_STREAM: u64 = 3;
const SCENE_STREAM: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub width: usize,
    pub height: usize,
    pub ranges: MetadataRanges,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            ranges: MetadataRanges::default(),
        }
    }
}

/// Everything needed to turn a seed into a tuple.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerationConfig {
    pub scene: SceneConfig,
    pub transfer: ForwardConfig,
    pub dataset: DatasetConfig,
    pub split: SplitSpec,
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.dataset.ranges.validate()?;
        self.split.validate(&self.dataset.ranges)?;
        if self.dataset.width == 0 || self.dataset.height == 0 {
            return Err(Error::Config("dataset dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn metadata(&self, seed: u64) -> Result<AcquisitionMetadata> {
        sample_metadata(derive_seed(seed, METADATA_STREAM), &self.dataset.ranges)
    }

    pub fn split_of(&self, seed: u64) -> Result<Split> {
        Ok(assign_split(&self.metadata(seed)?, &self.split))
    }

    /// The tuple for one sample seed, generated in single precision.
    pub fn sample(&self, seed: u64) -> Result<SampleTuple<f32>> {
        let m = self.metadata(seed)?;
        self.sample_with_metadata(seed, &m)
    }

    pub fn sample_with_metadata(
        &self,
        seed: u64,
        m: &AcquisitionMetadata,
    ) -> Result<SampleTuple<f32>> {
        let (w, h) = (self.dataset.width, self.dataset.height);
        let x = generate_scene::<f32>(derive_seed(seed, SCENE_STREAM), m, &self.scene, w, h)?;
        let mut t = simulate_tuple(seed, &x, m, &self.transfer)?;
        // Every derived seed follows from the sample seed; keep only that.
        t.x.seed = seed;
        t.split = assign_split(m, &self.split);
        Ok(t)
    }
}

/// Seed of sample `index` in a dataset with base seed `base`.
pub fn sample_seed(base: u64, index: u64) -> u64 {
    base.wrapping_add(index)
}

/// `count` tuples with seeds `base, base+1, ...`, in index order.
pub fn generate(cfg: &GenerationConfig, base: u64, count: usize) -> Result<Vec<SampleTuple<f32>>> {
    cfg.validate()?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| cfg.sample(sample_seed(base, i)))
        .collect()
}

/// Walks seeds from `base` and keeps the first `train` training and first
/// `validation` validation tuples. Split membership is decided from the
/// metadata alone, so rejected seeds cost no image synthesis.
pub fn generate_split_counts(
    cfg: &GenerationConfig,
    base: u64,
    train: usize,
    validation: usize,
) -> Result<(Vec<SampleTuple<f32>>, Vec<SampleTuple<f32>>)> {
    cfg.validate()?;
    let (mut tr, mut va) = (Vec::new(), Vec::new());
    let mut i = 0u64;
    let limit = 1000 * (train + validation) as u64 + 1000;
    while tr.len() < train || va.len() < validation {
        if i > limit {
            return Err(Error::Config(format!(
                "split spec too restrictive: {} train / {} validation after {i} draws",
                tr.len(),
                va.len()
            )));
        }
        let seed = sample_seed(base, i);
        match cfg.split_of(seed)? {
            Split::Train if tr.len() < train => tr.push(seed),
            Split::Validation if va.len() < validation => va.push(seed),
            _ => {}
        }
        i += 1;
    }
    let build = |seeds: Vec<u64>| -> Result<Vec<_>> {
        seeds.into_par_iter().map(|s| cfg.sample(s)).collect()
    };
    Ok((build(tr)?, build(va)?))
}

pub fn partition<T: Clone>(
    samples: &[SampleTuple<T>],
) -> (Vec<SampleTuple<T>>, Vec<SampleTuple<T>>) {
    samples
        .iter()
        .cloned()
        .partition(|s| s.split == Split::Train)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenerationConfig {
        let mut c = GenerationConfig::default();
        c.dataset.width = 32;
        c.dataset.height = 32;
        c
    }

    #[test]
    fn generation_is_deterministic_and_ordered() {
        let a = generate(&small(), 5, 4).unwrap();
        let b = generate(&small(), 5, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.iter().map(|s| s.seed).collect::<Vec<_>>(),
            vec![5, 6, 7, 8]
        );
        assert_ne!(a[0].x, a[1].x);
    }

    #[test]
    fn split_counts_are_met() {
        let (tr, va) = generate_split_counts(&small(), 0, 6, 2).unwrap();
        assert_eq!((tr.len(), va.len()), (6, 2));
        assert!(tr.iter().all(|s| s.split == Split::Train));
        assert!(va.iter().all(|s| s.split == Split::Validation));
    }

    #[test]
    fn empty_dataset() {
        assert!(generate(&small(), 0, 0).unwrap().is_empty());
    }
}
