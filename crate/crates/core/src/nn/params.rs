//! Named parameter tensors and the shape algebra of the network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

/// Name and shape of one tensor, as recorded in checkpoint manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl ParamSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub tensors: Vec<ParamTensor<T>>,
}

/// Index of a tensor inside [`ModelParams`].
pub type ParamId = usize;

fn push(specs: &mut Vec<ParamSpec>, name: String, shape: Vec<usize>) {
    specs.push(ParamSpec { name, shape });
}

fn conv(specs: &mut Vec<ParamSpec>, name: &str, cin: usize, cout: usize) {
    push(specs, format!("{name}.w"), vec![cout, cin, 3, 3]);
    push(specs, format!("{name}.b"), vec![cout]);
}

fn block(specs: &mut Vec<ParamSpec>, cfg: &NetworkConfig, name: &str, c: usize) {
    conv(specs, &format!("{name}.conv1"), c, c);
    conv(specs, &format!("{name}.conv2"), c, c);
    if cfg.variant.has_se() {
        let hidden = c / cfg.se_reduction;
        push(specs, format!("{name}.se.w1"), vec![hidden, c]);
        if cfg.variant == super::Variant::MetaSe {
            push(
                specs,
                format!("{name}.se.w1_meta"),
                vec![hidden, cfg.metadata_dim],
            );
        }
        push(specs, format!("{name}.se.b1"), vec![hidden]);
        push(specs, format!("{name}.se.w2"), vec![c, hidden]);
        push(specs, format!("{name}.se.b2"), vec![c]);
    }
}

/// Ordered tensor manifest for a configuration.
pub fn layout(cfg: &NetworkConfig) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    conv(&mut specs, "head", cfg.input_channels(), cfg.channels(0));
    for l in 0..cfg.levels {
        for b in 0..cfg.blocks_per_level {
            block(
                &mut specs,
                cfg,
                &format!("enc{l}.block{b}"),
                cfg.channels(l),
            );
        }
        if l + 1 < cfg.levels {
            conv(
                &mut specs,
                &format!("down{l}"),
                cfg.channels(l),
                cfg.channels(l + 1),
            );
        }
    }
    for l in (0..cfg.levels - 1).rev() {
        conv(
            &mut specs,
            &format!("up{l}"),
            cfg.channels(l + 1),
            cfg.channels(l),
        );
        for b in 0..cfg.blocks_per_level {
            block(
                &mut specs,
                cfg,
                &format!("dec{l}.block{b}"),
                cfg.channels(l),
            );
        }
    }
    conv(&mut specs, "tail", cfg.channels(0), 1);
    specs
}

impl<T: Real> ModelParams<T> {
    pub fn zeros(specs: &[ParamSpec]) -> Self {
        Self {
            tensors: specs
                .iter()
                .map(|s| ParamTensor {
                    name: s.name.clone(),
                    shape: s.shape.clone(),
                    data: vec![T::zero(); s.len()],
                })
                .collect(),
        }
    }

    /// Fan-in scaled uniform conv kernels, zero biases, small uniform SE MLPs.
    pub fn init(cfg: &NetworkConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Self::zeros(&layout(cfg));
        for t in params.tensors.iter_mut() {
            let bound =
                if t.name.ends_with(".b") || t.name.ends_with(".b1") || t.name.ends_with(".b2") {
                    0.0
                } else if t.shape.len() == 4 {
                    let fan_in = t.shape[1] * 9;
                    (6.0 / fan_in as f64).sqrt()
                } else {
                    let fan_in = t.shape[1];
                    0.5 / (fan_in as f64).sqrt()
                };
            if t.name.ends_with("conv2.w") {
                // Residual branches start small so the identity path dominates.
                for v in t.data.iter_mut() {
                    *v = T::of(0.1 * bound * (2.0 * rng.random::<f64>() - 1.0));
                }
                continue;
            }
            for v in t.data.iter_mut() {
                *v = T::of(bound * (2.0 * rng.random::<f64>() - 1.0));
            }
        }
        Ok(params)
    }

    pub fn specs(&self) -> Vec<ParamSpec> {
        self.tensors
            .iter()
            .map(|t| ParamSpec {
                name: t.name.clone(),
                shape: t.shape.clone(),
            })
            .collect()
    }

    pub fn count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn id(&self, name: &str) -> Result<ParamId> {
        self.tensors
            .iter()
            .position(|t| t.name == name)
            .ok_or_else(|| Error::Shape(format!("missing parameter {name}")))
    }

    pub fn get(&self, name: &str) -> Option<&ParamTensor<T>> {
        self.tensors.iter().find(|t| t.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut ParamTensor<T>> {
        self.tensors.iter_mut().find(|t| t.name == name)
    }

    /// Checks names and shapes against the configuration layout.
    pub fn check_layout(&self, cfg: &NetworkConfig) -> Result<()> {
        let expect = layout(cfg);
        if expect.len() != self.tensors.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, found {}",
                expect.len(),
                self.tensors.len()
            )));
        }
        for (s, t) in expect.iter().zip(&self.tensors) {
            if s.name != t.name || s.shape != t.shape || t.data.len() != s.len() {
                return Err(Error::Shape(format!(
                    "tensor {} {:?} does not match layout {} {:?}",
                    t.name, t.shape, s.name, s.shape
                )));
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|v| v.is_finite()))
    }

    /// Order-sensitive digest of every parameter bit pattern.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for t in &self.tensors {
            for v in &t.data {
                h ^= v.to_f64c().to_bits();
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        ModelParams {
            tensors: self
                .tensors
                .iter()
                .map(|t| ParamTensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    data: t.data.iter().map(|v| U::of(v.to_f64c())).collect(),
                })
                .collect(),
        }
    }

    /// `self += other` tensor by tensor.
    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in self.tensors.iter_mut() {
            for v in t.data.iter_mut() {
                *v *= s;
            }
        }
    }
}
