use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{NetworkConfig, Variant};
use super::input::InputStack;
use super::network::{backward, forward};
use super::ops::FeatureMap;
use super::params::ModelParams;
use crate::error::Result;
use crate::grid::Grid;

pub const FD_STEP: f64 = 1e-4;
pub const MAX_CHECK_PARAMS: usize = 10_000;
/// Gradients smaller than this in both estimates are compared absolutely.
const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_parameter: String,
    pub failing: Vec<String>,
    pub passed: bool,
    pub parameters_checked: usize,
    /// Perturbations that flipped a rectifier gate; central differences are
    /// meaningless across a kink so these entries are not compared.
    pub kinks_skipped: usize,
}

/// One level, four channels: small enough to finite-difference every weight.
pub fn micro_config(variant: Variant) -> NetworkConfig {
    NetworkConfig {
        variant,
        base_channels: 4,
        levels: 1,
        blocks_per_level: 1,
        se_reduction: 2,
        ..NetworkConfig::default()
    }
}

pub fn gradient_check(cfg: &NetworkConfig, seed: u64, tolerance: f64) -> Result<GradCheckReport> {
    gradient_check_with(cfg, seed, tolerance, 8, |_| {})
}

/// Compares reverse-mode gradients of `sum(prediction * g)` for a random `g`
/// against central differences over every parameter. `tamper` may modify the
/// analytic gradients before comparison.
pub fn gradient_check_with(
    cfg: &NetworkConfig,
    seed: u64,
    tolerance: f64,
    size: usize,
    tamper: impl FnOnce(&mut ModelParams<f64>),
) -> Result<GradCheckReport> {
    cfg.validate()?;
    let mut params = ModelParams::<f64>::init(cfg, seed)?;
    if params.count() > MAX_CHECK_PARAMS {
        return Err(crate::Error::Config(format!(
            "{} parameters is too many for finite differencing",
            params.count()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    // Nonzero biases keep the check away from symmetric configurations.
    for t in params.tensors.iter_mut().filter(|t| t.name.ends_with(".b")) {
        t.data
            .iter_mut()
            .for_each(|v| *v = rng.random_range(-0.1..0.1));
    }
    let mut channels = FeatureMap::zeros(cfg.input_channels(), size, size);
    channels
        .data
        .iter_mut()
        .for_each(|v| *v = rng.random_range(-1.0..1.0));
    let metadata = (cfg.variant == Variant::MetaSe).then(|| {
        (0..cfg.metadata_dim)
            .map(|_| rng.random_range(-1.5..1.5))
            .collect()
    });
    let input = InputStack { channels, metadata };
    let g = Grid::from_fn(size, size, |_, _| rng.random_range(-1.0..1.0));

    let objective = |p: &ModelParams<f64>| -> Result<(f64, u64)> {
        let (pred, cache) = forward(p, &input, cfg)?;
        let value = pred.data.iter().zip(&g.data).map(|(a, b)| a * b).sum();
        Ok((value, cache.gate_signature()))
    };

    let (_, cache) = forward(&params, &input, cfg)?;
    let gates = cache.gate_signature();
    let mut analytic = backward(&params, &cache, &g)?.params;
    tamper(&mut analytic);

    let mut worst = (0.0f64, String::new());
    let mut failing = Vec::new();
    let mut checked = 0;
    let mut kinks = 0;
    for t in 0..params.tensors.len() {
        let mut tensor_fail = false;
        for i in 0..params.tensors[t].data.len() {
            let orig = params.tensors[t].data[i];
            params.tensors[t].data[i] = orig + FD_STEP;
            let (plus, gp) = objective(&params)?;
            params.tensors[t].data[i] = orig - FD_STEP;
            let (minus, gm) = objective(&params)?;
            params.tensors[t].data[i] = orig;
            if gp != gates || gm != gates {
                kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic.tensors[t].data[i];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            checked += 1;
            if rel > worst.0 || worst.1.is_empty() {
                worst = (rel.max(worst.0), params.tensors[t].name.clone());
            }
            if !(rel < tolerance) {
                tensor_fail = true;
            }
        }
        if tensor_fail {
            failing.push(params.tensors[t].name.clone());
        }
    }
    Ok(GradCheckReport {
        max_relative_error: worst.0,
        worst_parameter: worst.1,
        passed: failing.is_empty(),
        failing,
        parameters_checked: checked,
        kinks_skipped: kinks,
    })
}
