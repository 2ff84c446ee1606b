use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::SampleTuple;
use crate::scalar::Real;
use crate::scene::{METADATA_DIM, METADATA_FIELDS};

/// Mean and standard deviation of one channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
}

impl ChannelStats {
    #[inline]
    pub fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.std
    }

    #[inline]
    pub fn invert(&self, v: f64) -> f64 {
        v * self.std + self.mean
    }
}

/// Training-split statistics used to standardize inputs, targets and metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub amplitude: ChannelStats,
    pub real: ChannelStats,
    pub imag: ChannelStats,
    pub target: ChannelStats,
    pub metadata: [ChannelStats; METADATA_DIM],
}

#[derive(Default)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn finish(&self, name: &str) -> Result<ChannelStats> {
        let mean = self.sum / self.n;
        let var = (self.sum_sq / self.n - mean * mean).max(0.0);
        let std = var.sqrt();
        if !(std > 0.0) || !std.is_finite() {
            return Err(Error::DegenerateChannel(name.to_string()));
        }
        Ok(ChannelStats { mean, std })
    }
}

/// Global per-channel pixel statistics and per-entry metadata statistics
/// (population standard deviation) over the given training samples.
pub fn fit_standardization<'a, T: Real + 'a>(
    training: impl IntoIterator<Item = &'a SampleTuple<T>>,
) -> Result<Standardization> {
    let (mut amp, mut re, mut im, mut tgt) = (
        Moments::default(),
        Moments::default(),
        Moments::default(),
        Moments::default(),
    );
    let mut meta: [Moments; METADATA_DIM] = Default::default();
    let mut count = 0usize;
    for s in training {
        count += 1;
        for (&a, &b) in s.y.re.iter().zip(&s.y.im) {
            let (a, b) = (a.to_f64c(), b.to_f64c());
            re.push(a);
            im.push(b);
            amp.push(a.hypot(b));
        }
        for v in &s.x.values.data {
            tgt.push(v.to_f64c());
        }
        for (m, v) in meta.iter_mut().zip(s.m.to_array()) {
            m.push(v);
        }
    }
    if count < 2 {
        return Err(Error::Config(format!(
            "standardization needs at least 2 training samples, got {count}"
        )));
    }
    let mut metadata = [ChannelStats {
        mean: 0.0,
        std: 1.0,
    }; METADATA_DIM];
    for ((slot, m), name) in metadata.iter_mut().zip(&meta).zip(METADATA_FIELDS) {
        *slot = m.finish(name)?;
    }
    Ok(Standardization {
        amplitude: amp.finish("amplitude")?,
        real: re.finish("real")?,
        imag: im.finish("imag")?,
        target: tgt.finish("target")?,
        metadata,
    })
}

impl Standardization {
    pub fn metadata_vector(&self, m: &crate::scene::AcquisitionMetadata) -> [f64; METADATA_DIM] {
        let mut out = [0.0; METADATA_DIM];
        for ((o, v), s) in out.iter_mut().zip(m.to_array()).zip(&self.metadata) {
            *o = s.apply(v);
        }
        out
    }
}
