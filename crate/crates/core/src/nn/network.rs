//! Forward evaluation on a recorded tape and exact reverse-mode gradients.

use super::config::{NetworkConfig, Variant};
use super::input::InputStack;
use super::ops::{self, FeatureMap, SeCache, SeWeights};
use super::params::{ModelParams, ParamId};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;

type NodeId = usize;

#[derive(Debug, Clone)]
enum Op<T> {
    Input,
    Conv {
        x: NodeId,
        w: ParamId,
        b: ParamId,
        stride: usize,
    },
    Relu {
        x: NodeId,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Upsample {
        x: NodeId,
    },
    Se {
        x: NodeId,
        w1: ParamId,
        w1_meta: Option<ParamId>,
        b1: ParamId,
        w2: ParamId,
        b2: ParamId,
        cache: SeCache<T>,
    },
}

#[derive(Debug, Clone)]
struct Node<T> {
    name: String,
    op: Op<T>,
    value: FeatureMap<T>,
}

/// Activations of one forward pass, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ActivationCache<T> {
    nodes: Vec<Node<T>>,
    metadata: Option<Vec<T>>,
    fingerprint: u64,
    param_count: usize,
}

/// Gradients of a scalar objective with respect to parameters and inputs.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub params: ModelParams<T>,
    pub input: FeatureMap<T>,
    pub metadata: Option<Vec<T>>,
}

struct Tape<'a, T> {
    params: &'a ModelParams<T>,
    metadata: Option<&'a [T]>,
    nodes: Vec<Node<T>>,
}

impl<'a, T: Real> Tape<'a, T> {
    fn record(&mut self, name: String, op: Op<T>, value: FeatureMap<T>) -> Result<NodeId> {
        if value.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteActivation { layer: name });
        }
        self.nodes.push(Node { name, op, value });
        Ok(self.nodes.len() - 1)
    }

    fn value(&self, id: NodeId) -> &FeatureMap<T> {
        &self.nodes[id].value
    }

    fn conv(&mut self, name: &str, x: NodeId, stride: usize) -> Result<NodeId> {
        let w = self.params.id(&format!("{name}.w"))?;
        let b = self.params.id(&format!("{name}.b"))?;
        let (wt, bt) = (&self.params.tensors[w], &self.params.tensors[b]);
        let input = self.value(x);
        if wt.shape[1] != input.channels {
            return Err(Error::Shape(format!(
                "{name}: kernel expects {} channels, input has {}",
                wt.shape[1], input.channels
            )));
        }
        let out = ops::conv3x3(input, &wt.data, &bt.data, stride);
        self.record(name.to_string(), Op::Conv { x, w, b, stride }, out)
    }

    fn relu(&mut self, name: &str, x: NodeId) -> Result<NodeId> {
        let out = ops::relu(self.value(x));
        self.record(name.to_string(), Op::Relu { x }, out)
    }

    fn add(&mut self, name: &str, a: NodeId, b: NodeId) -> Result<NodeId> {
        if !self.value(a).same_shape(self.value(b)) {
            return Err(Error::Shape(format!("{name}: operand shapes differ")));
        }
        let out = ops::add(self.value(a), self.value(b));
        self.record(name.to_string(), Op::Add { a, b }, out)
    }

    fn upsample(&mut self, name: &str, x: NodeId) -> Result<NodeId> {
        let out = ops::upsample2(self.value(x));
        self.record(name.to_string(), Op::Upsample { x }, out)
    }

    fn se(&mut self, name: &str, x: NodeId, inject: bool) -> Result<NodeId> {
        let p = self.params;
        let w1 = p.id(&format!("{name}.w1"))?;
        let w1_meta = if inject {
            Some(p.id(&format!("{name}.w1_meta"))?)
        } else {
            None
        };
        let b1 = p.id(&format!("{name}.b1"))?;
        let w2 = p.id(&format!("{name}.w2"))?;
        let b2 = p.id(&format!("{name}.b2"))?;
        let weights = SeWeights {
            w1: &p.tensors[w1].data,
            w1_meta: w1_meta.map(|id| p.tensors[id].data.as_slice()),
            b1: &p.tensors[b1].data,
            w2: &p.tensors[w2].data,
            b2: &p.tensors[b2].data,
        };
        let meta = if inject { self.metadata } else { None };
        let (out, cache) = ops::se_forward(self.value(x), meta, &weights);
        self.record(
            name.to_string(),
            Op::Se {
                x,
                w1,
                w1_meta,
                b1,
                w2,
                b2,
                cache,
            },
            out,
        )
    }

    /// Residual block `x + conv2(relu(conv1(x)))`, followed by SE when enabled.
    fn block(&mut self, cfg: &NetworkConfig, name: &str, x: NodeId) -> Result<NodeId> {
        let h = self.conv(&format!("{name}.conv1"), x, 1)?;
        let h = self.relu(&format!("{name}.relu"), h)?;
        let h = self.conv(&format!("{name}.conv2"), h, 1)?;
        let mut out = self.add(&format!("{name}.skip"), x, h)?;
        if cfg.variant.has_se() {
            out = self.se(&format!("{name}.se"), out, cfg.variant == Variant::MetaSe)?;
        }
        Ok(out)
    }
}

/// Runs the network and keeps every activation for [`backward`].
///
/// Layout: head conv, per-level residual blocks with stride-2 downsampling
/// between levels, nearest-neighbor upsampling plus conv with additive
/// encoder skips on the way back up, and a single-channel tail conv.
pub fn forward<T: Real>(
    params: &ModelParams<T>,
    input: &InputStack<T>,
    cfg: &NetworkConfig,
) -> Result<(Grid<T>, ActivationCache<T>)> {
    cfg.validate()?;
    params.check_layout(cfg)?;
    let x = &input.channels;
    if x.channels != cfg.input_channels() {
        return Err(Error::Shape(format!(
            "{} expects {} input channels, got {}",
            cfg.variant,
            cfg.input_channels(),
            x.channels
        )));
    }
    let mult = cfg.size_multiple();
    if !x.height.is_multiple_of(mult) || !x.width.is_multiple_of(mult) {
        return Err(Error::Shape(format!(
            "input {}x{} not divisible by {mult}",
            x.width, x.height
        )));
    }
    let metadata = match cfg.variant {
        Variant::MetaSe => Some(
            input
                .metadata
                .as_deref()
                .filter(|m| m.len() == cfg.metadata_dim)
                .ok_or_else(|| Error::Shape("meta_se needs a metadata vector".into()))?,
        ),
        _ => None,
    };

    let mut tape = Tape {
        params,
        metadata,
        nodes: Vec::new(),
    };
    let root = tape.record("input".into(), Op::Input, x.clone())?;
    let mut h = tape.conv("head", root, 1)?;
    let mut skips = Vec::new();
    for l in 0..cfg.levels {
        for b in 0..cfg.blocks_per_level {
            h = tape.block(cfg, &format!("enc{l}.block{b}"), h)?;
        }
        if l + 1 < cfg.levels {
            skips.push(h);
            h = tape.conv(&format!("down{l}"), h, 2)?;
        }
    }
    for l in (0..cfg.levels - 1).rev() {
        h = tape.upsample(&format!("up{l}.nearest"), h)?;
        h = tape.conv(&format!("up{l}"), h, 1)?;
        h = tape.add(&format!("up{l}.skip"), h, skips[l])?;
        for b in 0..cfg.blocks_per_level {
            h = tape.block(cfg, &format!("dec{l}.block{b}"), h)?;
        }
    }
    let out = tape.conv("tail", h, 1)?;

    let value = &tape.nodes[out].value;
    let pred = Grid {
        width: value.width,
        height: value.height,
        data: value.data.clone(),
    };
    let cache = ActivationCache {
        nodes: tape.nodes,
        metadata: metadata.map(|m| m.to_vec()),
        fingerprint: params.fingerprint(),
        param_count: params.count(),
    };
    Ok((pred, cache))
}

fn accumulate<T: Real>(slot: &mut Option<FeatureMap<T>>, g: FeatureMap<T>) {
    match slot {
        Some(acc) => {
            for (a, v) in acc.data.iter_mut().zip(&g.data) {
                *a += *v;
            }
        }
        None => *slot = Some(g),
    }
}

fn add_into<T: Real>(dst: &mut [T], src: &[T]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += *s;
    }
}

/// Reverse-mode pass for the objective whose gradient with respect to the
/// prediction is `grad_output`.
pub fn backward<T: Real>(
    params: &ModelParams<T>,
    cache: &ActivationCache<T>,
    grad_output: &Grid<T>,
) -> Result<Gradients<T>> {
    if cache.param_count != params.count() || cache.fingerprint != params.fingerprint() {
        return Err(Error::StaleCache(
            "parameters changed since the forward pass".into(),
        ));
    }
    let last = cache.nodes.len() - 1;
    let out = &cache.nodes[last].value;
    if (grad_output.width, grad_output.height) != (out.width, out.height) {
        return Err(Error::DimensionMismatch {
            expected: (out.width, out.height),
            found: (grad_output.width, grad_output.height),
        });
    }
    let mut grads: Vec<Option<FeatureMap<T>>> = vec![None; cache.nodes.len()];
    grads[last] = Some(FeatureMap {
        channels: 1,
        height: out.height,
        width: out.width,
        data: grad_output.data.clone(),
    });
    let mut pgrads = ModelParams::zeros(&params.specs());
    let mut meta_grad = cache.metadata.as_ref().map(|m| vec![T::zero(); m.len()]);

    for id in (1..cache.nodes.len()).rev() {
        let Some(g) = grads[id].take() else { continue };
        let node = &cache.nodes[id];
        match &node.op {
            Op::Input => unreachable!("input is node 0"),
            Op::Conv { x, w, b, stride } => {
                let cg = ops::conv3x3_backward(
                    &cache.nodes[*x].value,
                    &params.tensors[*w].data,
                    &g,
                    *stride,
                );
                add_into(&mut pgrads.tensors[*w].data, &cg.weight);
                add_into(&mut pgrads.tensors[*b].data, &cg.bias);
                accumulate(&mut grads[*x], cg.input);
            }
            Op::Relu { x } => {
                let gx = ops::relu_backward(&cache.nodes[*x].value, &g);
                accumulate(&mut grads[*x], gx);
            }
            Op::Add { a, b } => {
                accumulate(&mut grads[*b], g.clone());
                accumulate(&mut grads[*a], g);
            }
            Op::Upsample { x } => {
                accumulate(&mut grads[*x], ops::upsample2_backward(&g));
            }
            Op::Se {
                x,
                w1,
                w1_meta,
                b1,
                w2,
                b2,
                cache: se_cache,
            } => {
                let weights = SeWeights {
                    w1: &params.tensors[*w1].data,
                    w1_meta: w1_meta.map(|id| params.tensors[id].data.as_slice()),
                    b1: &params.tensors[*b1].data,
                    w2: &params.tensors[*w2].data,
                    b2: &params.tensors[*b2].data,
                };
                let meta = w1_meta.and(cache.metadata.as_deref());
                let sg = ops::se_backward(&cache.nodes[*x].value, meta, &weights, se_cache, &g);
                add_into(&mut pgrads.tensors[*w1].data, &sg.w1);
                add_into(&mut pgrads.tensors[*b1].data, &sg.b1);
                add_into(&mut pgrads.tensors[*w2].data, &sg.w2);
                add_into(&mut pgrads.tensors[*b2].data, &sg.b2);
                if let (Some(id), Some(gw)) = (w1_meta, &sg.w1_meta) {
                    add_into(&mut pgrads.tensors[*id].data, gw);
                }
                if let (Some(acc), Some(gm)) = (meta_grad.as_mut(), &sg.meta) {
                    add_into(acc, gm);
                }
                accumulate(&mut grads[*x], sg.input);
            }
        }
    }
    let input = grads[0]
        .take()
        .unwrap_or_else(|| cache.nodes[0].value.zeros_like());
    Ok(Gradients {
        params: pgrads,
        input,
        metadata: meta_grad,
    })
}

impl<T: Real> ActivationCache<T> {
    /// Hash of every rectifier's on/off pattern. Two passes with equal
    /// signatures lie on the same linear piece of the network.
    pub fn gate_signature(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for node in &self.nodes {
            if let Op::Relu { x } = node.op {
                for v in &self.nodes[x].value.data {
                    h = (h ^ (*v > T::zero()) as u64).wrapping_mul(0x0100_0000_01b3);
                }
            }
        }
        h
    }
}

/// Layer names in evaluation order.
pub fn layer_names<T>(cache: &ActivationCache<T>) -> Vec<&str> {
    cache.nodes.iter().map(|n| n.name.as_str()).collect()
}
