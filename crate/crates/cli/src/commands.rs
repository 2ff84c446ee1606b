use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use serde::Serialize;

use sar_restore::apodization::{self, ApodizationReport, ImpulseMeasure};
use sar_restore::forward::{metadata_to_transfer, TransferSpec};
use sar_restore::grid::{ComplexImage, Grid};
use sar_restore::io::preview::{self, DEFAULT_DYNAMIC_RANGE_DB};
use sar_restore::io::sample_file::{read_raw_pair, write_raw};
use sar_restore::io::tables::{self, MetricsRow};
use sar_restore::io::{self as sio, ExperimentConfig};
use sar_restore::metrics::{self, MetricsReport, Region};
use sar_restore::nn::Variant;
use sar_restore::scene::{AcquisitionMetadata, Split};
use sar_restore::train::{self, Loss};
use sar_restore::window::WindowKind;
use sar_restore::Error;

use crate::Common;

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    match &c.config {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("config {}", p.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn read_manifest(dir: &Path) -> Result<sio::DatasetManifest> {
    sio::read_manifest(dir).with_context(|| format!("dataset {}", dir.display()))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Number of tuples.
    #[arg(long)]
    count: usize,
}

pub fn gen(c: &Common, a: GenArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let m = sio::write_dataset(&c.out, &cfg.generation(), c.seed.unwrap_or(0), a.count)?;
    let val = m
        .records
        .iter()
        .filter(|r| r.split == Split::Validation)
        .count();
    println!(
        "wrote {} samples ({} train, {} validation) to {}",
        m.sample_count,
        m.sample_count - val,
        val,
        c.out.display()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory written by `gen`.
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Edge-preserving loss with this edge weight instead of MAE.
    #[arg(long)]
    epl: Option<f64>,
    #[arg(long)]
    no_augment: bool,
}

pub fn train(c: &Common, a: TrainArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut net = cfg.network;
    let mut tc = cfg.train;
    if let Some(v) = a.variant {
        net.variant = v;
    }
    if let Some(e) = a.epochs {
        tc.epochs = e;
    }
    if let Some(lr) = a.lr {
        tc.learning_rate = lr;
    }
    if let Some(b) = a.batch_size {
        tc.batch_size = b;
    }
    if let Some(lambda) = a.epl {
        tc.loss = Loss::Epl { lambda };
    }
    if let Some(s) = c.seed {
        tc.seed = s;
    }
    tc.augment &= !a.no_augment;
    tc.deterministic |= c.deterministic;

    let manifest = read_manifest(&a.data)?;
    let stats = manifest
        .standardization
        .clone()
        .ok_or(Error::MissingStatistics)?;
    let train_set = sio::load_samples(&a.data, &manifest, Some(Split::Train))?;
    let val_set = sio::load_samples(&a.data, &manifest, Some(Split::Validation))?;
    let (ckpt, history) = train::train(&train_set, &val_set, &stats, &net, &tc, |r| {
        println!(
            "epoch {:>4}  train {:.5}  val {:.5}  psnr {:.3}  ssim {:.4}  lr {:.3e}",
            r.epoch, r.train_loss, r.val_loss, r.val_psnr, r.val_ssim, r.lr
        )
    })?;
    sio::write_checkpoint(&c.out.join("checkpoint.sarckpt"), &ckpt)?;
    tables::write_history(&c.out.join("history.csv"), &history.epochs)?;
    println!("best epoch {} (val loss {:.5})", ckpt.epoch, ckpt.val_loss);
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint to evaluate; omit together with --identity for the
    /// no-restoration baseline.
    #[arg(long, required_unless_present = "identity")]
    checkpoint: Option<PathBuf>,
    /// Evaluate the gain-compensated |y|^2 baseline.
    #[arg(long, conflicts_with = "checkpoint")]
    identity: bool,
    #[arg(long, default_value = "validation")]
    split: Split,
    /// Output CSV file name inside --out.
    #[arg(long, default_value = "eval.csv")]
    csv: String,
}

pub fn eval(c: &Common, a: EvalArgs) -> Result<()> {
    let manifest = read_manifest(&a.data)?;
    let samples = sio::load_samples(&a.data, &manifest, Some(a.split))?;
    let report = match &a.checkpoint {
        Some(p) => {
            let ckpt =
                sio::read_checkpoint(p).with_context(|| format!("checkpoint {}", p.display()))?;
            train::evaluate(&ckpt, &samples, manifest.standardization.as_ref())?
        }
        None => {
            let fwd = manifest.generation.transfer;
            train::evaluate_with(&samples, |s| train::identity_estimate(s, &fwd))?
        }
    };
    tables::write_eval(&c.out.join(&a.csv), &report)?;
    println!(
        "{} samples: psnr {:.4} dB  ssim {:.4}  mae {:.5}",
        report.rows.len(),
        report.mean.psnr_db,
        report.mean.ssim,
        report.mean.mae
    );
    Ok(())
}

#[derive(Args, Debug, Clone, Default)]
pub struct SlcInput {
    /// SampleFile whose observed SLC is used.
    #[arg(long, conflicts_with_all = ["raw_re", "raw_im"])]
    input: Option<PathBuf>,
    /// Headerless little-endian f32 real plane.
    #[arg(long, requires_all = ["raw_im", "width", "height"])]
    raw_re: Option<PathBuf>,
    #[arg(long, requires = "raw_re")]
    raw_im: Option<PathBuf>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
}

impl SlcInput {
    fn load(&self) -> Result<ComplexImage<f32>> {
        if let Some(p) = &self.input {
            return Ok(sio::read_sample(p)
                .with_context(|| format!("input {}", p.display()))?
                .y);
        }
        match (&self.raw_re, &self.raw_im, self.width, self.height) {
            (Some(re), Some(im), Some(w), Some(h)) => Ok(read_raw_pair(re, im, w, h)?),
            _ => bail!("give --input or --raw-re/--raw-im with --width/--height"),
        }
    }
}

#[derive(Args, Debug)]
pub struct RestoreArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    slc: SlcInput,
    #[arg(long)]
    bearing: Option<f64>,
    #[arg(long)]
    incidence: Option<f64>,
    #[arg(long)]
    squint: Option<f64>,
    /// Resolution (m) injected as metadata.
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long)]
    noise_level: Option<f64>,
    /// Preview dynamic range below the image maximum.
    #[arg(long, default_value_t = DEFAULT_DYNAMIC_RANGE_DB)]
    range_db: f64,
    /// Output file stem inside --out.
    #[arg(long, default_value = "restored")]
    name: String,
}

#[derive(Serialize)]
struct RestoreInfo {
    width: usize,
    height: usize,
    metadata: AcquisitionMetadata,
}

pub fn restore(c: &Common, a: RestoreArgs) -> Result<()> {
    let ckpt = sio::read_checkpoint(&a.checkpoint)
        .with_context(|| format!("checkpoint {}", a.checkpoint.display()))?;
    let y = a.slc.load()?;
    // Unspecified entries default to the training-split means.
    let mut v: Vec<f64> = ckpt
        .standardization
        .metadata
        .iter()
        .map(|s| s.mean)
        .collect();
    for (slot, o) in v.iter_mut().zip([
        a.bearing,
        a.incidence,
        a.squint,
        a.resolution,
        a.noise_level,
    ]) {
        if let Some(o) = o {
            *slot = o;
        }
    }
    let m = AcquisitionMetadata::from_array(v.try_into().map_err(|_| anyhow!("metadata length"))?);
    let x_hat = train::predict(&ckpt, &y, &m)?;
    write_raw(&c.out.join(format!("{}.f32", a.name)), &x_hat)?;
    preview::write_png(&c.out.join(format!("{}.png", a.name)), &x_hat, a.range_db)?;
    write_json(
        &c.out.join(format!("{}.json", a.name)),
        &RestoreInfo {
            width: x_hat.width,
            height: x_hat.height,
            metadata: m,
        },
    )?;
    println!(
        "restored {}x{} image to {}",
        x_hat.width,
        x_hat.height,
        c.out.display()
    );
    Ok(())
}

#[derive(Args, Debug, Clone)]
pub struct TransferArgs {
    /// Fractional bandwidth of the input (overrides --resolution).
    #[arg(long)]
    bandwidth: Option<f64>,
    /// Resolution (m); bandwidth = pixel spacing / resolution.
    #[arg(long)]
    resolution: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    squint: f64,
    /// Window the input was formed with (default: configured window).
    #[arg(long)]
    window: Option<WindowKind>,
}

impl TransferArgs {
    fn spec(&self, cfg: &ExperimentConfig) -> Result<TransferSpec> {
        let window = self.window.unwrap_or(cfg.transfer.window);
        let mut m = AcquisitionMetadata::from_array([0.0; 5]);
        m.squint = self.squint;
        m.resolution = match (self.bandwidth, self.resolution) {
            (Some(b), _) => cfg.transfer.pixel_spacing / b,
            (None, Some(r)) => r,
            (None, None) => bail!("give --bandwidth or --resolution"),
        };
        let spec = metadata_to_transfer(&m, cfg.transfer.pixel_spacing, window);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Serialize)]
struct SlcInfo<'a> {
    width: usize,
    height: usize,
    report: &'a ApodizationReport,
}

fn write_slc(
    dir: &Path,
    stem: &str,
    img: &ComplexImage<f32>,
    report: &ApodizationReport,
) -> Result<()> {
    write_raw(&dir.join(format!("{stem}.re.f32")), &img.real_part())?;
    write_raw(&dir.join(format!("{stem}.im.f32")), &img.imag_part())?;
    write_json(
        &dir.join(format!("{stem}.json")),
        &SlcInfo {
            width: img.width,
            height: img.height,
            report,
        },
    )
}

#[derive(Args, Debug)]
pub struct ApodizeArgs {
    #[command(flatten)]
    slc: SlcInput,
    #[command(flatten)]
    transfer: TransferArgs,
    /// Target window.
    #[arg(long, default_value = "hamming")]
    to: WindowKind,
    /// Homogeneous region `row,col,height,width` for the mean-bias check.
    #[arg(long)]
    region: Option<Region>,
}

pub fn apodize(c: &Common, a: ApodizeArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let y = a.slc.load()?;
    let from = a.transfer.spec(&cfg)?;
    let to = from.with_windows(a.to);
    let out = apodization::reapodize(&y, &from, &to)?;
    let report = ApodizationReport::compute(&y, &out, ImpulseMeasure::default(), a.region)?;
    write_slc(&c.out, "apodized", &out, &report)?;
    println!(
        "pslr {:.2} -> {:.2} dB, islr {:.2} -> {:.2} dB",
        report.pslr_before, report.pslr_after, report.islr_before, report.islr_after
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct SvaArgs {
    #[command(flatten)]
    slc: SlcInput,
    /// Crop the spectrum to the occupied band first (needs transfer flags).
    #[arg(long)]
    extract_band: bool,
    #[command(flatten)]
    transfer: TransferArgs,
    #[arg(long)]
    region: Option<Region>,
}

pub fn sva(c: &Common, a: SvaArgs) -> Result<()> {
    let cfg = load_config(c)?;
    let mut y = a.slc.load()?;
    if a.extract_band {
        y = apodization::extract_band(&y, &a.transfer.spec(&cfg)?)?;
    }
    let out = apodization::sva(&y);
    let how = ImpulseMeasure {
        upsample: 1,
        mainlobe_half: Some(1),
    };
    let report = ApodizationReport::compute(&y, &out, how, a.region)?;
    write_slc(&c.out, "sva", &out, &report)?;
    println!(
        "peak {:.4} -> {:.4}, islr {:.2} -> {:.2} dB",
        report.peak_before, report.peak_after, report.islr_before, report.islr_after
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// SampleFile providing the reference reflectivity.
    #[arg(long)]
    reference: PathBuf,
    /// Headerless f32 estimate; defaults to the sample's |y|^2.
    #[arg(long)]
    estimate: Option<PathBuf>,
    /// ENL region `row,col,height,width` on the estimate.
    #[arg(long)]
    region: Option<Region>,
    /// Also measure PSLR/ISLR of the sample's observed SLC.
    #[arg(long)]
    impulse: bool,
}

pub fn metrics(c: &Common, a: MetricsArgs) -> Result<()> {
    let s = sio::read_sample(&a.reference)?;
    let (w, h) = s.x.dims();
    let est = match &a.estimate {
        Some(p) => {
            let bytes = std::fs::read(p).with_context(|| format!("estimate {}", p.display()))?;
            if bytes.len() != 4 * w * h {
                return Err(Error::Truncated {
                    expected: 4 * w * h,
                    actual: bytes.len(),
                }
                .into());
            }
            let v = bytes
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            Grid::from_vec(w, h, v)?
        }
        None => s.y.intensity(),
    };
    let (pslr, islr) = if a.impulse {
        let (_, p, i) = apodization::impulse_ratios(&s.y, ImpulseMeasure::default())?;
        (Some(p), Some(i))
    } else {
        (None, None)
    };
    let report = MetricsReport {
        psnr: metrics::psnr(&s.x, &est)?,
        ssim: metrics::ssim(&s.x, &est)?,
        enl: a.region.map(|r| metrics::enl(&est, r)).transpose()?,
        mae: metrics::mae(&s.x, &est)?,
        pslr,
        islr,
    };
    let id = a
        .reference
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    tables::write_metrics(&c.out.join("metrics.csv"), &[MetricsRow::new(id, &report)])?;
    println!(
        "psnr {:.4} dB  ssim {:.4}  mae {:.5}",
        report.psnr, report.ssim, report.mae
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// `model=path/to/eval.csv`, repeated.
    #[arg(long = "input", required = true)]
    inputs: Vec<String>,
}

pub fn report(c: &Common, a: ReportArgs) -> Result<()> {
    let mut all = Vec::new();
    for spec in &a.inputs {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("expected model=path, got {spec:?}"))?;
        all.push((name.to_string(), tables::read_eval(Path::new(path))?));
    }
    let rows = tables::merge_reports(&all)?;
    tables::write_report(&c.out.join("report.csv"), &rows)?;
    println!("{:<16} {:>10} {:>8} {:>10}", "model", "psnr", "ssim", "mae");
    for r in &rows {
        println!(
            "{:<16} {:>10.4} {:>8.4} {:>10.5}",
            r.model, r.psnr, r.ssim, r.mae
        );
    }
    Ok(())
}
