//! End-to-end runs of the `wmlab` binary.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn wmlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wmlab")).current_dir(dir).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let p = dir.join("bench.toml");
    std::fs::write(&p, format!("format = \"wmlab-bench\"\nversion = 1\n{body}")).unwrap();
    p
}

#[test]
fn ring_embed_then_detect() {
    let d = tempfile::tempdir().unwrap();
    let scene = json(&wmlab(d.path(), &["scenegen", "4", "--out", "s.png"]));
    assert_eq!(scene["size"], 256);
    assert!(d.path().join("s_mask.png").exists());

    let e = json(&wmlab(d.path(), &["embed", "ring", "s.png", "ring.key", "--seed", "9", "--out", "w.png"]));
    assert!(e["psnr"].as_f64().unwrap() > 30.0);
    assert!(d.path().join("ring.key").exists());

    let marked = json(&wmlab(d.path(), &["detect", "ring", "w.png", "ring.key"]));
    assert_eq!(marked["kind"], "p_value");
    assert!(marked["p_value"].as_f64().unwrap() < 1e-4);
    let clean = json(&wmlab(d.path(), &["detect", "ring", "s.png", "ring.key"]));
    assert!(clean["p_value"].as_f64().unwrap() > 1e-4);
}

#[test]
fn bit_codec_round_trip_and_existing_key_reuse() {
    let d = tempfile::tempdir().unwrap();
    json(&wmlab(d.path(), &["scenegen", "8", "--out", "s.png"]));
    let msg = "10110011100011110000111110000011";
    for codec in ["dwtdct", "spread", "latentbit"] {
        let key = format!("{codec}.key");
        let out = format!("{codec}.png");
        let e = json(&wmlab(d.path(), &["embed", codec, "s.png", &key, "--message", msg, "--out", &out]));
        assert_eq!(e["message"], msg);
        let bits = json(&wmlab(d.path(), &["detect", codec, &out, &key]));
        assert_eq!(bits["extracted"], msg, "{codec}");
        let acc = json(&wmlab(d.path(), &["detect", codec, &out, &key, "--truth", msg]));
        assert_eq!(acc["bit_accuracy"].as_f64(), Some(1.0), "{codec}: {acc}");
    }
    // A second embed with a different seed reuses the stored key.
    let before = std::fs::read_to_string(d.path().join("spread.key")).unwrap();
    json(&wmlab(d.path(), &["embed", "spread", "s.png", "spread.key", "--seed", "99", "--out", "x.png"]));
    assert_eq!(before, std::fs::read_to_string(d.path().join("spread.key")).unwrap());
}

#[test]
fn attack_and_metric() {
    let d = tempfile::tempdir().unwrap();
    json(&wmlab(d.path(), &["scenegen", "2", "--size", "64", "--out", "s.png"]));
    let a = json(&wmlab(d.path(), &["attack", "identity", "s.png", "--out", "i.png", "--mask-out", "keep.png"]));
    assert_eq!(a["preserved_coverage"], 1.0);
    let same = json(&wmlab(d.path(), &["metric", "s.png", "i.png"]));
    assert_eq!(same["psnr"], "inf");
    assert_eq!(same["ssim"], 1.0);

    let b = json(&wmlab(d.path(), &["attack", "blur:sigma=2", "s.png", "--out", "b.png"]));
    assert_eq!(b["attack"], "blur:sigma=2");
    let m = json(&wmlab(d.path(), &["metric", "s.png", "b.png", "--mask", "s_mask.png"]));
    assert!(m["ssim"].as_f64().unwrap() < 1.0);
    assert!(m["mssim"].as_f64().unwrap() >= m["ssim"].as_f64().unwrap());

    let s = json(&wmlab(d.path(), &["attack", "semregen", "s.png", "--out", "r.png"]));
    assert!(s["prompt_used"].as_str().is_some_and(|p| !p.is_empty()));
    assert!(s["stages"].as_array().unwrap().len() >= 4);
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(wmlab(d.path(), &["--help"]).status.code(), Some(0));
    // usage / configuration errors
    assert_eq!(wmlab(d.path(), &["attack", "warp:x=1", "s.png"]).status.code(), Some(1));
    assert_eq!(wmlab(d.path(), &["frobnicate"]).status.code(), Some(1));
    let bad = write_config(d.path(), "seed_count = 0\n");
    assert_eq!(wmlab(d.path(), &["bench", bad.to_str().unwrap()]).status.code(), Some(1));
    let bad = write_config(d.path(), "image_size = 100\n");
    assert_eq!(wmlab(d.path(), &["bench", bad.to_str().unwrap()]).status.code(), Some(1));
    let bad = write_config(d.path(), "image_size = 64\n");
    assert_eq!(wmlab(d.path(), &["bench", bad.to_str().unwrap()]).status.code(), Some(1));
    // I/O errors
    assert_eq!(wmlab(d.path(), &["metric", "nope.png", "nope2.png"]).status.code(), Some(3));
    assert_eq!(wmlab(d.path(), &["bench", "missing.toml"]).status.code(), Some(3));
    std::fs::write(d.path().join("junk.png"), b"not a png").unwrap();
    assert_eq!(wmlab(d.path(), &["metric", "junk.png", "junk.png"]).status.code(), Some(3));
    // A key for the wrong codec is a configuration error.
    json(&wmlab(d.path(), &["scenegen", "1", "--size", "64", "--out", "s.png"]));
    json(&wmlab(d.path(), &["embed", "spread", "s.png", "k.key", "--out", "w.png"]));
    assert_eq!(wmlab(d.path(), &["detect", "ring", "w.png", "k.key"]).status.code(), Some(1));
}

#[test]
fn bench_writes_every_format_and_verifies() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(
        d.path(),
        "image_size = 128\nseed_count = 3\nattacks = [\"identity\", \"blur:sigma=1\", \"semregen\"]\noutput_dir = \"out\"\n",
    );
    let out = wmlab(d.path(), &["bench", cfg.to_str().unwrap(), "--workers", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["cells.csv", "report.json", "tables.md", "scatter.svg"] {
        assert!(d.path().join("out").join(f).exists(), "{f}");
    }
    let report = wmlab_harness::load_report(&d.path().join("out/report.json")).unwrap();
    report.verify().unwrap();
    assert_eq!(report.cells.len(), 4 * 3);
    let csv = std::fs::read_to_string(d.path().join("out/cells.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 12);
    assert!(!report.has_failures());
}

#[test]
fn calibrate_writes_record() {
    let d = tempfile::tempdir().unwrap();
    let cfg = write_config(d.path(), "image_size = 64\nwatermarks = [\"ring\", \"spread\"]\noutput_dir = \"cal\"\n");
    let out = wmlab(d.path(), &["calibrate", cfg.to_str().unwrap(), "--trials", "100"]);
    let rec = json(&out);
    assert_eq!(rec["ring"]["trials"], 100);
    assert_eq!(rec["ring"]["histogram"].as_array().unwrap().len(), 20);
    assert_eq!(rec["bit_codecs"][0]["codec"], "spread");
    assert!(d.path().join("cal/calibration.json").exists());
    assert_eq!(wmlab(d.path(), &["calibrate", cfg.to_str().unwrap(), "--trials", "10"]).status.code(), Some(1));
}
