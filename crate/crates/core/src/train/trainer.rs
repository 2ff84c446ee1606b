use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamParams, AdamState};
use super::augment::Dihedral;
use super::loss::Loss;
use super::standardize::Standardization;
use crate::error::{Error, Result};
use crate::forward::{build_mask, derive_seed, metadata_to_transfer, ForwardConfig, SampleTuple};
use crate::grid::Grid;
use crate::metrics;
use crate::nn::{backward, build_input, forward, ModelParams, NetworkConfig};
use crate::scene::AcquisitionMetadata;

const INIT_STREAM: u64 = 10;
const SHUFFLE_STREAM: u64 = 11;
const AUGMENT_STREAM: u64 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Per-epoch multiplicative learning-rate decay.
    pub gamma: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub loss: Loss,
    pub adam: AdamParams,
    pub augment: bool,
    pub seed: u64,
    pub deterministic: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            gamma: 0.99,
            epochs: 200,
            batch_size: 8,
            loss: Loss::Mae,
            adam: AdamParams::default(),
            augment: true,
            seed: 0,
            deterministic: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!(
                "invalid learning rate {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        self.loss.validate()
    }
}

pub fn lr_schedule(epoch: usize, cfg: &TrainConfig) -> f64 {
    cfg.learning_rate * cfg.gamma.powi(epoch as i32)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_psnr: f64,
    pub val_ssim: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
}

/// Trained weights plus everything needed to apply them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: NetworkConfig,
    pub params: ModelParams<f32>,
    pub standardization: Standardization,
    pub epoch: usize,
    pub val_loss: f64,
}

fn standardized_target(s: &SampleTuple<f32>, st: &Standardization) -> Grid<f32> {
    s.x.values.map(|v| st.target.apply(v as f64) as f32)
}

/// Prediction in the standardized target domain.
fn predict_standardized(
    params: &ModelParams<f32>,
    net: &NetworkConfig,
    st: &Standardization,
    s: &SampleTuple<f32>,
) -> Result<Grid<f32>> {
    let input = build_input(&s.y, &s.m, net, Some(st))?;
    Ok(forward(params, &input, net)?.0)
}

fn sample_gradient(
    params: &ModelParams<f32>,
    net: &NetworkConfig,
    st: &Standardization,
    loss: &Loss,
    s: &SampleTuple<f32>,
) -> Result<(f64, ModelParams<f32>)> {
    let input = build_input(&s.y, &s.m, net, Some(st))?;
    let (pred, cache) = forward(params, &input, net)?;
    let (value, grad) = loss.value_and_grad(&pred, &standardized_target(s, st))?;
    Ok((value, backward(params, &cache, &grad)?.params))
}

struct Validation {
    loss: f64,
    psnr: f64,
    ssim: f64,
}

fn validate_split(
    params: &ModelParams<f32>,
    net: &NetworkConfig,
    st: &Standardization,
    loss: &Loss,
    val: &[SampleTuple<f32>],
) -> Result<Validation> {
    let rows: Vec<(f64, f64, f64)> = val
        .par_iter()
        .map(|s| {
            let pred = predict_standardized(params, net, st, s)?;
            let l = loss.value(&pred, &standardized_target(s, st))?;
            let x_hat = pred.map(|v| st.target.invert(v as f64) as f32);
            Ok((
                l,
                metrics::psnr(&s.x.values, &x_hat)?,
                metrics::ssim(&s.x.values, &x_hat)?,
            ))
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    Ok(Validation {
        loss: rows.iter().map(|r| r.0).sum::<f64>() / n,
        psnr: rows.iter().map(|r| r.1).sum::<f64>() / n,
        ssim: rows.iter().map(|r| r.2).sum::<f64>() / n,
    })
}

/// Weights a training run with this configuration starts from.
pub fn initial_params(net: &NetworkConfig, cfg: &TrainConfig) -> Result<ModelParams<f32>> {
    ModelParams::init(net, derive_seed(cfg.seed, INIT_STREAM))
}

/// Mini-batch training with per-epoch validation; returns the checkpoint
/// with the lowest validation loss.
pub fn train(
    train_set: &[SampleTuple<f32>],
    val_set: &[SampleTuple<f32>],
    stats: &Standardization,
    net: &NetworkConfig,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(Checkpoint, TrainHistory)> {
    cfg.validate()?;
    net.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Config(
            "training and validation splits must be nonempty".into(),
        ));
    }
    let mut params = initial_params(net, cfg)?;
    let mut adam = AdamState::new(&params);
    let mut history = TrainHistory::default();
    let mut best: Option<Checkpoint> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();

    for epoch in 0..cfg.epochs {
        let lr = lr_schedule(epoch, cfg);
        let epoch_seed = cfg.seed.wrapping_add(epoch as u64);
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
            epoch_seed,
            SHUFFLE_STREAM,
        )));
        let mut aug_rng = ChaCha8Rng::seed_from_u64(derive_seed(epoch_seed, AUGMENT_STREAM));
        let mut loss_sum = 0.0;
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<SampleTuple<f32>> = chunk
                .iter()
                .map(|&i| {
                    if cfg.augment {
                        Dihedral::random(&mut aug_rng).apply(&train_set[i])
                    } else {
                        Ok(train_set[i].clone())
                    }
                })
                .collect::<Result<_>>()?;
            let per_sample =
                |s: &SampleTuple<f32>| sample_gradient(&params, net, stats, &cfg.loss, s);
            let (value, mut grads) = if cfg.deterministic {
                let parts: Vec<_> = batch.par_iter().map(per_sample).collect::<Result<_>>()?;
                let mut it = parts.into_iter();
                let (mut v, mut g) = it.next().expect("nonempty batch");
                for (vi, gi) in it {
                    v += vi;
                    g.add_assign(&gi);
                }
                (v, g)
            } else {
                batch
                    .par_iter()
                    .map(per_sample)
                    .try_reduce_with(|(va, mut ga), (vb, gb)| {
                        ga.add_assign(&gb);
                        Ok((va + vb, ga))
                    })
                    .expect("nonempty batch")?
            };
            if !value.is_finite() {
                return Err(Error::Divergence { epoch, batch: b });
            }
            let n = batch.len() as f32;
            grads.scale(1.0 / n);
            loss_sum += value;
            adam_step(&mut params, &grads, &mut adam, lr, &cfg.adam)?;
        }
        let v = validate_split(&params, net, stats, &cfg.loss, val_set)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_loss: v.loss,
            val_psnr: v.psnr,
            val_ssim: v.ssim,
            lr,
        };
        on_epoch(&record);
        history.epochs.push(record);
        if best.as_ref().is_none_or(|c| v.loss < c.val_loss) {
            history.best_epoch = Some(epoch);
            best = Some(Checkpoint {
                network: *net,
                params: params.clone(),
                standardization: stats.clone(),
                epoch,
                val_loss: v.loss,
            });
        }
    }
    Ok((best.expect("at least one epoch"), history))
}

/// Reflectivity estimate for one observation.
pub fn predict(
    ckpt: &Checkpoint,
    y: &crate::grid::ComplexImage<f32>,
    m: &AcquisitionMetadata,
) -> Result<Grid<f32>> {
    let st = &ckpt.standardization;
    let input = build_input(y, m, &ckpt.network, Some(st))?;
    let (pred, _) = forward(&ckpt.params, &input, &ckpt.network)?;
    Ok(pred.map(|v| st.target.invert(v as f64) as f32))
}

/// Gain-compensated observed intensity `|y|^2 / mean(|H|^2)`: the estimate
/// of `x` that applies no restoration beyond undoing the transfer gain.
pub fn identity_estimate(s: &SampleTuple<f32>, fwd: &ForwardConfig) -> Result<Grid<f32>> {
    let (w, h) = s.dims();
    let spec = metadata_to_transfer(&s.m, fwd.pixel_spacing, fwd.window);
    let mask = build_mask::<f64>(&spec, w, h)?;
    let gain = mask.weights.iter().map(|v| v * v).sum::<f64>() / (w * h) as f64;
    Ok(s.y.intensity().map(|v| (v as f64 / gain) as f32))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub sample_id: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub mae: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub mean: EvalRow,
}

/// Per-sample PSNR/SSIM/MAE of `estimate(sample)` against `x`, and their means.
pub fn evaluate_with(
    samples: &[SampleTuple<f32>],
    estimate: impl Fn(&SampleTuple<f32>) -> Result<Grid<f32>> + Sync,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(Error::Config("nothing to evaluate".into()));
    }
    let rows: Vec<EvalRow> = samples
        .par_iter()
        .map(|s| {
            let x_hat = estimate(s)?;
            Ok(EvalRow {
                sample_id: format!("{}", s.seed),
                psnr_db: metrics::psnr(&s.x.values, &x_hat)?,
                ssim: metrics::ssim(&s.x.values, &x_hat)?,
                mae: metrics::mae(&s.x.values, &x_hat)?,
            })
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    let mean = EvalRow {
        sample_id: "mean".into(),
        psnr_db: rows.iter().map(|r| r.psnr_db).sum::<f64>() / n,
        ssim: rows.iter().map(|r| r.ssim).sum::<f64>() / n,
        mae: rows.iter().map(|r| r.mae).sum::<f64>() / n,
    };
    Ok(EvalReport { rows, mean })
}

/// Evaluates a checkpoint. When `dataset_stats` is given it must equal the
/// checkpoint's standardization.
pub fn evaluate(
    ckpt: &Checkpoint,
    samples: &[SampleTuple<f32>],
    dataset_stats: Option<&Standardization>,
) -> Result<EvalReport> {
    if let Some(ds) = dataset_stats {
        if *ds != ckpt.standardization {
            return Err(Error::StandardizationMismatch(
                "checkpoint was trained with different statistics than this dataset".into(),
            ));
        }
    }
    evaluate_with(samples, |s| predict(ckpt, &s.y, &s.m))
}
