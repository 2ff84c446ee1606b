//! Dataset directories: one sample file per tuple plus `manifest.json`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sample_file::{read_sample, write_sample, SampleImages};
use crate::dataset::{sample_seed, GenerationConfig};
use crate::error::{Error, Result};
use crate::forward::SampleTuple;
use crate::scene::{AcquisitionMetadata, ReflectivityScene, Split};
use crate::train::{fit_standardization, Standardization};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub file: String,
    pub seed: u64,
    pub metadata: AcquisitionMetadata,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub sample_count: usize,
    pub width: usize,
    pub height: usize,
    pub base_seed: u64,
    pub generation: GenerationConfig,
    /// Fitted on the training split when it has at least two samples.
    pub standardization: Option<Standardization>,
    pub records: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn validate(&self, dir: &Path) -> Result<()> {
        if self.format_version != MANIFEST_VERSION {
            return Err(Error::VersionMismatch {
                expected: MANIFEST_VERSION,
                found: self.format_version,
            });
        }
        if self.sample_count != self.records.len() {
            return Err(Error::Format(format!(
                "manifest lists {} records but declares {}",
                self.records.len(),
                self.sample_count
            )));
        }
        if let Some(r) = self.records.iter().find(|r| !dir.join(&r.file).is_file()) {
            return Err(Error::Format(format!("missing sample file {}", r.file)));
        }
        Ok(())
    }
}

pub fn sample_file_name(index: usize) -> String {
    format!("sample_{index:06}.sart")
}

/// Generates `count` tuples into `dir` and writes the manifest last.
pub fn write_dataset(
    dir: &Path,
    cfg: &GenerationConfig,
    base_seed: u64,
    count: usize,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let records: Vec<(SampleRecord, SampleTuple<f32>)> = (0..count)
        .into_par_iter()
        .map(|i| {
            let s = cfg.sample(sample_seed(base_seed, i as u64))?;
            let file = sample_file_name(i);
            write_sample(&dir.join(&file), &SampleImages::of(&s))?;
            let rec = SampleRecord {
                file,
                seed: s.seed,
                metadata: s.m,
                split: s.split,
            };
            Ok((rec, s))
        })
        .collect::<Result<_>>()?;
    let train: Vec<&SampleTuple<f32>> = records
        .iter()
        .map(|r| &r.1)
        .filter(|s| s.split == Split::Train)
        .collect();
    let standardization = if train.len() >= 2 {
        Some(fit_standardization(train)?)
    } else {
        None
    };
    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        sample_count: count,
        width: cfg.dataset.width,
        height: cfg.dataset.height,
        base_seed,
        generation: cfg.clone(),
        standardization,
        records: records.into_iter().map(|r| r.0).collect(),
    };
    write_manifest(dir, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(dir: &Path, m: &DatasetManifest) -> Result<()> {
    let mut json = serde_json::to_string_pretty(m)?;
    json.push('\n');
    std::fs::write(dir.join(MANIFEST_FILE), json)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path: PathBuf = dir.join(MANIFEST_FILE);
    let m: DatasetManifest = serde_json::from_slice(&std::fs::read(&path)?)?;
    m.validate(dir)?;
    Ok(m)
}

/// Loads the tuples of `split` (all of them when `None`) in manifest order.
pub fn load_samples(
    dir: &Path,
    m: &DatasetManifest,
    split: Option<Split>,
) -> Result<Vec<SampleTuple<f32>>> {
    m.records
        .par_iter()
        .filter(|r| split.is_none_or(|s| s == r.split))
        .map(|r| {
            let img = read_sample(&dir.join(&r.file))?;
            if img.x.dims() != (m.width, m.height) {
                return Err(Error::DimensionMismatch {
                    expected: (m.width, m.height),
                    found: img.x.dims(),
                });
            }
            Ok(SampleTuple {
                x: ReflectivityScene::new(img.x, r.seed),
                z: img.z,
                y: img.y,
                m: r.metadata,
                seed: r.seed,
                split: r.split,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> GenerationConfig {
        let mut c = GenerationConfig::default();
        c.dataset.width = 32;
        c.dataset.height = 32;
        c
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_dataset(dir.path(), &cfg(), 42, 6).unwrap();
        let back = read_manifest(dir.path()).unwrap();
        assert_eq!(back, m);
        let all = load_samples(dir.path(), &back, None).unwrap();
        let fresh = crate::dataset::generate(&cfg(), 42, 6).unwrap();
        assert_eq!(all, fresh);
    }

    #[test]
    fn missing_file_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &cfg(), 1, 2).unwrap();
        std::fs::remove_file(dir.path().join(sample_file_name(1))).unwrap();
        assert!(matches!(read_manifest(dir.path()), Err(Error::Format(_))));
    }

    #[test]
    fn zero_count() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_dataset(dir.path(), &cfg(), 1, 0).unwrap();
        assert_eq!(m.sample_count, 0);
        assert!(m.records.is_empty());
    }
}
