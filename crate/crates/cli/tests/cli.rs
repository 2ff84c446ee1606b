use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sar-restore"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.path(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v.into_iter()
        .map(|(path, b)| (path.file_name().unwrap().into(), b))
        .collect()
}

const SMALL: &str = r#"{
  "dataset": {"width": 32, "height": 32},
  "network": {"base_channels": 4},
  "train": {"epochs": 2, "batch_size": 4}
}"#;

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, SMALL).unwrap();
    path
}

#[test]
fn gen_is_deterministic_and_handles_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path());
    let (a, b, z) = (
        tmp.path().join("a"),
        tmp.path().join("b"),
        tmp.path().join("z"),
    );
    for d in [&a, &b] {
        ok(&[
            "gen",
            "--config",
            p(&cfg),
            "--count",
            "12",
            "--seed",
            "4",
            "--out",
            p(d),
        ]);
    }
    assert_eq!(tree(&a), tree(&b));
    assert_eq!(tree(&a).len(), 13);
    ok(&["gen", "--count", "0", "--out", p(&z)]);
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(z.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["sample_count"], 0);
}

#[test]
fn pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let cfg = small_config(t);
    let data = t.join("data");
    ok(&[
        "gen",
        "--config",
        p(&cfg),
        "--count",
        "80",
        "--seed",
        "1",
        "--out",
        p(&data),
    ]);

    let runs = t.join("runs");
    for variant in ["meta_se", "plain"] {
        let out = runs.join(variant);
        ok(&[
            "train",
            "--config",
            p(&cfg),
            "--data",
            p(&data),
            "--variant",
            variant,
            "--deterministic",
            "--threads",
            "1",
            "--out",
            p(&out),
        ]);
        let hist = std::fs::read_to_string(out.join("history.csv")).unwrap();
        assert!(hist.starts_with("epoch,train_loss,val_loss,val_psnr,val_ssim,lr\n"));
        assert_eq!(hist.lines().count(), 3);
    }

    let ev = t.join("eval");
    let ckpt = runs.join("meta_se/checkpoint.sarckpt");
    for name in ["a.csv", "b.csv"] {
        ok(&[
            "eval",
            "--data",
            p(&data),
            "--checkpoint",
            p(&ckpt),
            "--deterministic",
            "--csv",
            name,
            "--out",
            p(&ev),
        ]);
    }
    assert_eq!(
        std::fs::read(ev.join("a.csv")).unwrap(),
        std::fs::read(ev.join("b.csv")).unwrap()
    );
    ok(&[
        "eval",
        "--data",
        p(&data),
        "--checkpoint",
        p(&runs.join("plain/checkpoint.sarckpt")),
        "--csv",
        "plain.csv",
        "--out",
        p(&ev),
    ]);
    ok(&[
        "eval",
        "--data",
        p(&data),
        "--identity",
        "--csv",
        "identity.csv",
        "--out",
        p(&ev),
    ]);

    let rep = t.join("report");
    ok(&[
        "report",
        "--input",
        &format!("meta_se={}", p(&ev.join("a.csv"))),
        "--input",
        &format!("plain={}", p(&ev.join("plain.csv"))),
        "--out",
        p(&rep),
    ]);
    let table = std::fs::read_to_string(rep.join("report.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "model,psnr,ssim,mae");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("meta_se,") && lines[2].starts_with("plain,"));

    // Resolution injection changes the restored image.
    let input = data.join("sample_000000.sart");
    let rs = t.join("restore");
    for (res, name) in [("0.25", "fine"), ("0.40", "coarse")] {
        ok(&[
            "restore",
            "--checkpoint",
            p(&ckpt),
            "--input",
            p(&input),
            "--resolution",
            res,
            "--name",
            name,
            "--out",
            p(&rs),
        ]);
    }
    let read = |n: &str| -> Vec<f32> {
        std::fs::read(rs.join(n))
            .unwrap()
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
            .collect()
    };
    let (fine, coarse) = (read("fine.f32"), read("coarse.f32"));
    assert_eq!(fine.len(), 32 * 32);
    let diff: f64 = fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| ((a - b) as f64).powi(2))
        .sum();
    assert!(diff > 0.0);
    assert!(rs.join("fine.png").is_file());

    // Restore from a raw re/im pair gives the same result as from the sample file.
    let sva = t.join("sva");
    ok(&["sva", "--input", p(&input), "--out", p(&sva)]);
    let ap = t.join("apod");
    ok(&[
        "apodize",
        "--input",
        p(&input),
        "--resolution",
        "0.3",
        "--to",
        "kaiser:2.5",
        "--out",
        p(&ap),
    ]);
    ok(&[
        "restore",
        "--checkpoint",
        p(&ckpt),
        "--raw-re",
        p(&ap.join("apodized.re.f32")),
        "--raw-im",
        p(&ap.join("apodized.im.f32")),
        "--width",
        "32",
        "--height",
        "32",
        "--out",
        p(&rs),
        "--name",
        "raw",
    ]);
    let mt = t.join("metrics");
    ok(&[
        "metrics",
        "--reference",
        p(&input),
        "--estimate",
        p(&rs.join("fine.f32")),
        "--region",
        "0,0,16,16",
        "--impulse",
        "--out",
        p(&mt),
    ]);
    let m = std::fs::read_to_string(mt.join("metrics.csv")).unwrap();
    assert!(m.starts_with("sample_id,psnr_db,ssim,enl,mae,pslr_db,islr_db\n"));
}

fn assert_single_line_failure(args: &[&str]) {
    let out = run(args);
    assert!(!out.status.success(), "{args:?} should fail");
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err:?}");
    assert!(!err.trim().is_empty());
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let tmp = tempfile::tempdir().unwrap();
    let t = tmp.path();
    let missing = t.join("nope.sarckpt");
    let out = t.join("o");
    assert_single_line_failure(&["eval", "--data", p(t), "--identity", "--out", p(&out)]);
    assert_single_line_failure(&[
        "restore",
        "--checkpoint",
        p(&missing),
        "--input",
        p(&missing),
        "--out",
        p(&out),
    ]);
    let junk = t.join("junk.sart");
    std::fs::write(&junk, b"XXXX0000").unwrap();
    assert_single_line_failure(&["sva", "--input", p(&junk), "--out", p(&out)]);
    let bad_cfg = t.join("bad.json");
    std::fs::write(&bad_cfg, r#"{"train": {"gamma": 2.0}}"#).unwrap();
    assert_single_line_failure(&[
        "gen",
        "--config",
        p(&bad_cfg),
        "--count",
        "1",
        "--out",
        p(&out),
    ]);
    assert_single_line_failure(&["frobnicate"]);
    assert_single_line_failure(&["gen"]);
}
