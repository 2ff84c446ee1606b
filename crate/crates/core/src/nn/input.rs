use super::config::{NetworkConfig, Variant};
use super::ops::FeatureMap;
use crate::error::{Error, Result};
use crate::grid::ComplexImage;
use crate::scalar::Real;
use crate::scene::AcquisitionMetadata;
use crate::train::Standardization;

/// Network input: standardized (amplitude, real, imaginary) planes, plus
/// metadata maps or a metadata vector depending on the variant.
#[derive(Debug, Clone, PartialEq)]
pub struct InputStack<T> {
    pub channels: FeatureMap<T>,
    pub metadata: Option<Vec<T>>,
}

pub fn build_input<T: Real>(
    y: &ComplexImage<T>,
    m: &AcquisitionMetadata,
    cfg: &NetworkConfig,
    stats: Option<&Standardization>,
) -> Result<InputStack<T>> {
    let stats = stats.ok_or(Error::MissingStatistics)?;
    let (w, h) = y.dims();
    let n = w * h;
    let meta = stats.metadata_vector(m);
    let mut channels = FeatureMap::zeros(cfg.input_channels(), h, w);
    for i in 0..n {
        let (a, b) = (y.re[i].to_f64c(), y.im[i].to_f64c());
        channels.data[i] = T::of(stats.amplitude.apply(a.hypot(b)));
        channels.data[n + i] = T::of(stats.real.apply(a));
        channels.data[2 * n + i] = T::of(stats.imag.apply(b));
    }
    if cfg.variant == Variant::MetaMaps {
        for (k, v) in meta.iter().enumerate() {
            channels
                .plane_mut(3 + k)
                .iter_mut()
                .for_each(|p| *p = T::of(*v));
        }
    }
    let metadata =
        (cfg.variant == Variant::MetaSe).then(|| meta.iter().map(|&v| T::of(v)).collect());
    Ok(InputStack { channels, metadata })
}
