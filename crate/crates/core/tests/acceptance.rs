//! Acceptance suite: one PASS/FAIL line per criterion; exits nonzero if any fail.

use std::path::Path;
use std::time::Instant;

use sar_restore::apodization::{self, ImpulseMeasure};
use sar_restore::dataset::{generate_split_counts, GenerationConfig};
use sar_restore::forward::{
    apply_transfer, build_mask, lag1_autocorrelation, synth_speckle, TransferSpec,
};
use sar_restore::grid::{ComplexImage, Grid};
use sar_restore::io::checkpoint::{decode_checkpoint, encode_checkpoint};
use sar_restore::io::sample_file::{decode_sample, encode_sample, SampleImages};
use sar_restore::io::write_dataset;
use sar_restore::metrics::{self, Region};
use sar_restore::nn::{gradient_check, micro_config, ModelParams, NetworkConfig, Variant};
use sar_restore::scene::{
    assign_split, sample_metadata, AcquisitionMetadata, MetadataRanges, ReflectivityScene, Split,
    SplitSpec,
};
use sar_restore::spectral;
use sar_restore::train::{
    self, fit_standardization, Checkpoint, Loss, Standardization, TrainConfig,
};
use sar_restore::window::WindowKind;
use sar_restore::{Result, SampleTuple32};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn within(v: f64, target: f64, rel: f64) -> bool {
    (v - target).abs() <= rel * target.abs()
}

fn speckle_statistics() -> Result<Outcome> {
    let n = 512;
    let x = ReflectivityScene::new(Grid::filled(n, n, 1.0f64), 0);
    let z = synth_speckle(2024, &x)?;
    let intensity = z.intensity();
    let mean = intensity.mean();
    let enl = metrics::enl(&intensity, Region::whole(&intensity))?;
    let amp = z.amplitude();
    let am = amp.mean();
    let sd =
        (amp.data.iter().map(|v| (v - am).powi(2)).sum::<f64>() / amp.data.len() as f64).sqrt();
    let ratio = am / sd;
    let pass = within(mean, 1.0, 0.01) && (enl - 1.0).abs() <= 0.05 && within(ratio, 1.9131, 0.02);
    outcome(
        pass,
        format!("mean |z|^2 {mean:.4} (1 +-1%), ENL {enl:.4} (1 +-0.05), amplitude mean/std {ratio:.4} (1.9131 +-2%)"),
    )
}

fn correlated_speckle() -> Result<Outcome> {
    let n = 256;
    let x = ReflectivityScene::new(Grid::filled(n, n, 1.0f64), 0);
    let z = synth_speckle(7, &x)?;
    let spec = TransferSpec::separable(WindowKind::Rect, 0.5);
    let y = apply_transfer(&z, &build_mask(&spec, n, n)?)?;
    let ry = lag1_autocorrelation(&y.re, n, n);
    let rz = lag1_autocorrelation(&z.re, n, n);
    outcome(
        ry >= 0.3 && rz.abs() <= 0.05,
        format!("lag-1 autocorrelation y {ry:.4} (>= 0.3), z {rz:.4} (<= 0.05)"),
    )
}

fn impulse_fidelity() -> Result<Outcome> {
    let n = 256;
    let rect = TransferSpec::separable(WindowKind::Rect, 0.5);
    let imp = ComplexImage::<f64>::impulse(n, n, n / 2, n / 2);
    let y = apply_transfer(&imp, &build_mask(&rect, n, n)?)?;
    let (_, pslr_rect, _) = apodization::impulse_ratios(&y, ImpulseMeasure::default())?;
    let hamming = rect.with_windows(WindowKind::Hamming);
    let h = apodization::reapodize(&y, &rect, &hamming)?;
    let (_, pslr_ham, _) = apodization::impulse_ratios(&h, ImpulseMeasure::default())?;
    let w_rect = metrics::half_power_width(&spectral::upsample(&y, 8).amplitude())?;
    let w_ham = metrics::half_power_width(&spectral::upsample(&h, 8).amplitude())?;
    let broadening = w_ham / w_rect;
    let pass =
        (pslr_rect + 13.26).abs() <= 0.3 && pslr_ham <= -40.0 && within(broadening, 1.47, 0.10);
    outcome(
        pass,
        format!(
            "rect PSLR {pslr_rect:.3} dB (-13.26 +-0.3), hamming PSLR {pslr_ham:.2} dB (<= -40), -3 dB broadening {broadening:.4} (1.47 +-10%)"
        ),
    )
}

/// The impulse sits on an odd pixel of the 2x-oversampled grid, which is a
/// half-sample offset once the band is extracted to Nyquist sampling;
/// ratios are read on that sample grid with a one-sample mainlobe.
fn sva_suppression() -> Result<Outcome> {
    let n = 256;
    let spec = TransferSpec::separable(WindowKind::Rect, 0.5);
    let mask = build_mask(&spec, n, n)?;
    let how = ImpulseMeasure {
        upsample: 1,
        mainlobe_half: Some(1),
    };
    let imp = ComplexImage::<f64>::impulse(n, n, n / 2 + 1, n / 2 + 1);
    let y = apodization::extract_band(&apply_transfer(&imp, &mask)?, &spec)?;
    let s = apodization::sva(&y);
    let (p0, _, i0) = apodization::impulse_ratios(&y, how)?;
    let (p1, _, i1) = apodization::impulse_ratios(&s, how)?;
    let gain = i0 - i1;

    // On the exact Nyquist grid every sidelobe sample is already zero.
    let on_grid = ComplexImage::<f64>::impulse(n, n, n / 2, n / 2);
    let yg = apodization::extract_band(&apply_transfer(&on_grid, &mask)?, &spec)?;
    let unchanged = apodization::sva(&yg).max_relative_diff(&yg) < 1e-9;

    let x = ReflectivityScene::new(Grid::filled(n, n, 1.0f64), 0);
    let speck = apodization::extract_band(&apply_transfer(&synth_speckle(11, &x)?, &mask)?, &spec)?;
    let before = speck.amplitude().mean();
    let after = apodization::sva(&speck).amplitude().mean();

    let pass = within(p1, p0, 0.01) && gain >= 20.0 && after <= before;
    outcome(
        pass,
        format!(
            "peak {p0:.4} -> {p1:.4} (+-1%), ISLR {i0:.2} -> {i1:.2} dB (gain {gain:.2} >= 20), speckle mean amplitude {before:.4} -> {after:.4} (no increase); on-grid impulse left unchanged: {unchanged}"
        ),
    )
}

fn split_protocol() -> Result<Outcome> {
    let ranges = MetadataRanges::default();
    let spec = SplitSpec::default();
    let count = (0..5000u64)
        .map(|s| sample_metadata(s, &ranges).map(|m| assign_split(&m, &spec)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|s| *s == Split::Validation)
        .count();
    // A point outside every validation interval, then each field moved to
    // its interval endpoints and just beyond them.
    let outside = AcquisitionMetadata::from_array([10.0, 20.0, 30.0, 0.5, -25.0]);
    let mut endpoints_ok = assign_split(&outside, &spec) == Split::Train;
    for (k, iv) in spec.validation.iter().enumerate() {
        for (v, want) in [
            (iv.lo, Split::Validation),
            (iv.hi, Split::Validation),
            (iv.lo - 1e-9, Split::Train),
            (iv.hi + 1e-9, Split::Train),
        ] {
            let mut a = outside.to_array();
            a[k] = v;
            endpoints_ok &= assign_split(&AcquisitionMetadata::from_array(a), &spec) == want;
        }
    }
    outcome(
        (275..=460).contains(&count) && endpoints_ok,
        format!(
            "validation count {count}/5000 (275..=460), closed endpoints honored: {endpoints_ok}"
        ),
    )
}

fn gradient_correctness() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    let mut pass = true;
    for v in Variant::ALL {
        let cfg = micro_config(v);
        let n = ModelParams::<f64>::init(&cfg, 0)?.count();
        let r = gradient_check(&cfg, 1, 1e-4)?;
        worst = worst.max(r.max_relative_error);
        pass &= r.passed && n < 10_000;
        parts.push(format!("{v} {:.1e} ({n} params)", r.max_relative_error));
    }
    outcome(
        pass,
        format!(
            "max relative error {worst:.2e} (< 1e-4): {}",
            parts.join(", ")
        ),
    )
}

struct Trained {
    stats: Standardization,
    train_set: Vec<SampleTuple32>,
    val_set: Vec<SampleTuple32>,
    budget: TrainConfig,
    meta_se: Checkpoint,
    meta_se_psnr: f64,
}

fn smoke_budget(seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: 30,
        loss: Loss::Mae,
        seed,
        ..TrainConfig::default()
    }
}

fn training_smoke(trained: &mut Option<Trained>) -> Result<Outcome> {
    let gen = GenerationConfig::default();
    let (train_set, val_set) = generate_split_counts(&gen, 7, 200, 20)?;
    let stats = fit_standardization(&train_set)?;
    let baseline = train::evaluate_with(&val_set, |s| train::identity_estimate(s, &gen.transfer))?;
    let net = NetworkConfig::default();
    let budget = smoke_budget(0);
    let (ckpt, _) = train::train(&train_set, &val_set, &stats, &net, &budget, |_| {})?;
    let psnr = train::evaluate(&ckpt, &val_set, Some(&stats))?.mean.psnr_db;
    let gain = psnr - baseline.mean.psnr_db;

    let one = std::slice::from_ref(&train_set[0]);
    let overfit = TrainConfig {
        epochs: 5,
        batch_size: 1,
        augment: false,
        ..TrainConfig::default()
    };
    let (_, h) = train::train(one, one, &stats, &net, &overfit, |_| {})?;
    let losses: Vec<f64> = h.epochs.iter().map(|e| e.train_loss).collect();
    let monotone = losses.windows(2).all(|w| w[1] < w[0]);

    *trained = Some(Trained {
        stats,
        train_set,
        val_set,
        budget,
        meta_se: ckpt,
        meta_se_psnr: psnr,
    });
    outcome(
        gain >= 1.0 && monotone,
        format!(
            "{} variant: best-checkpoint PSNR {psnr:.3} dB vs identity baseline {:.3} dB (gain {gain:.3} >= 1); one-sample losses {:?} strictly decreasing: {monotone}",
            net.variant,
            baseline.mean.psnr_db,
            losses.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn metadata_ordering(t: &Trained) -> Result<Outcome> {
    let mut wins = 0;
    let mut parts = Vec::new();
    for seed in 0..3u64 {
        let budget = TrainConfig { seed, ..t.budget };
        let psnr_of = |variant: Variant| -> Result<f64> {
            let net = NetworkConfig::default().with_variant(variant);
            let (c, _) = train::train(&t.train_set, &t.val_set, &t.stats, &net, &budget, |_| {})?;
            Ok(train::evaluate(&c, &t.val_set, Some(&t.stats))?
                .mean
                .psnr_db)
        };
        // Seed 0 with the default variant is the run trained for the smoke test.
        let meta = if seed == t.budget.seed {
            t.meta_se_psnr
        } else {
            psnr_of(Variant::MetaSe)?
        };
        let plain = psnr_of(Variant::Plain)?;
        if meta >= plain {
            wins += 1;
        }
        parts.push(format!(
            "seed {seed}: meta_se {meta:.3} vs plain {plain:.3}"
        ));
    }
    outcome(
        wins >= 2,
        format!(
            "meta_se >= plain on {wins}/3 seeds (>= 2): {}",
            parts.join("; ")
        ),
    )
}

fn injection_control(t: &Trained) -> Result<Outcome> {
    let s = &t.val_set[0];
    let run = |resolution: f64| -> Result<Grid<f32>> {
        let mut m = s.m;
        m.resolution = resolution;
        train::predict(&t.meta_se, &s.y, &m)
    };
    let (fine, coarse) = (run(0.25)?, run(0.40)?);
    let diff: f64 = fine
        .data
        .iter()
        .zip(&coarse.data)
        .map(|(a, b)| ((a - b) as f64).powi(2))
        .sum();
    let norm: f64 = coarse.data.iter().map(|b| (*b as f64).powi(2)).sum();
    let rel = (diff / norm).sqrt();
    let hf_fine = metrics::high_frequency_fraction(&fine)?;
    let hf_coarse = metrics::high_frequency_fraction(&coarse)?;
    outcome(
        rel > 1e-3 && hf_fine > hf_coarse,
        format!(
            "relative L2 difference {rel:.4e} (> 1e-3); high-frequency fraction at 0.25 m {hf_fine:.5} vs 0.40 m {hf_coarse:.5} (finer must be larger)"
        ),
    )
}

fn tree_bytes(dir: &Path) -> Result<Vec<(String, Vec<u8>)>> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir)? {
        let e = e?;
        out.push((
            e.file_name().to_string_lossy().into_owned(),
            std::fs::read(e.path())?,
        ));
    }
    out.sort();
    Ok(out)
}

fn determinism_io(t: &Trained) -> Result<Outcome> {
    let mut small = GenerationConfig::default();
    small.dataset.width = 32;
    small.dataset.height = 32;
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    write_dataset(a.path(), &small, 99, 100)?;
    write_dataset(b.path(), &small, 99, 100)?;
    let (ta, tb) = (tree_bytes(a.path())?, tree_bytes(b.path())?);
    let identical = ta.len() == 101 && ta == tb;

    let img = SampleImages::of(&t.val_set[0]);
    let sample_ok = decode_sample(&encode_sample(&img)?)? == img;
    let bytes = encode_checkpoint(&t.meta_se)?;
    let back = decode_checkpoint(&bytes)?;
    let ckpt_ok = back == t.meta_se && encode_checkpoint(&back)? == bytes;

    let p = Grid::from_fn(48, 40, |r, c| ((r * 31 + c * 17) % 23) as f32 * 0.37 - 3.0);
    let q = Grid::from_fn(48, 40, |r, c| ((r * 7 + c * 29) % 19) as f32 * 0.41 - 2.5);
    let (mae, g_mae) = Loss::Mae.value_and_grad(&p, &q)?;
    let (epl, g_epl) = Loss::Epl { lambda: 0.0 }.value_and_grad(&p, &q)?;
    let epl_ok = mae.to_bits() == epl.to_bits() && g_mae == g_epl;

    outcome(
        identical && sample_ok && ckpt_ok && epl_ok,
        format!(
            "100-sample regeneration byte-identical: {identical}; sample round-trip bit-exact: {sample_ok}; checkpoint round-trip bit-exact: {ckpt_ok}; EPL(lambda=0) == MAE exactly: {epl_ok}"
        ),
    )
}

fn main() {
    let mut failures = 0;
    let mut report =
        |id: u32, name: &str, limit_s: Option<f64>, f: &mut dyn FnMut() -> Result<Outcome>| {
            let t0 = Instant::now();
            let r = f();
            let secs = t0.elapsed().as_secs_f64();
            let (mut pass, detail) = match r {
                Ok(o) => (o.pass, o.detail),
                Err(e) => (false, format!("error: {e}")),
            };
            let timing = match limit_s {
                Some(l) => {
                    pass &= secs < l;
                    format!("{secs:.1} s, limit {l} s")
                }
                None => format!("{secs:.1} s"),
            };
            if !pass {
                failures += 1;
            }
            println!(
                "[{}] {id:>2} {name}: {detail} [{timing}]",
                if pass { "PASS" } else { "FAIL" }
            );
        };

    report(1, "speckle statistics", Some(5.0), &mut speckle_statistics);
    report(2, "correlated speckle", Some(10.0), &mut correlated_speckle);
    report(
        3,
        "impulse-response fidelity",
        Some(5.0),
        &mut impulse_fidelity,
    );
    report(
        4,
        "SVA sidelobe suppression",
        Some(10.0),
        &mut sva_suppression,
    );
    report(5, "split protocol", Some(1.0), &mut split_protocol);
    report(
        6,
        "gradient correctness",
        Some(120.0),
        &mut gradient_correctness,
    );
    let mut trained = None;
    report(7, "training smoke", Some(900.0), &mut || {
        training_smoke(&mut trained)
    });
    match &trained {
        Some(t) => {
            report(8, "metadata benefit ordering", None, &mut || {
                metadata_ordering(t)
            });
            report(9, "metadata injection control", Some(60.0), &mut || {
                injection_control(t)
            });
            report(10, "determinism and I/O", None, &mut || determinism_io(t));
        }
        None => {
            for (id, name) in [
                (8, "metadata benefit ordering"),
                (9, "metadata injection control"),
                (10, "determinism and I/O"),
            ] {
                report(id, name, None, &mut || {
                    outcome(false, "no trained model (criterion 7 errored)".into())
                });
            }
        }
    }
    println!("acceptance: {} of 10 criteria failed", failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
