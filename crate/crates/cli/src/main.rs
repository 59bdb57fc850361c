use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use serde_json::json;
use wmlab::attacks::{run_attack, AttackContext, AttackSpec};
use wmlab::codecs::{BitMessage, CodecKind, DetectionOutcome, Watermark};
use wmlab::image::{decode_mask_png, decode_png, encode_mask_png, encode_png, BinaryMask, ImageF};
use wmlab::metrics::QualityReport;
use wmlab::rng::{derive_seed, RngStream};
use wmlab::scenegen::generate_scene;
use wmlab_harness::bench::run_bench;
use wmlab_harness::calibrate::calibrate_null;
use wmlab_harness::config::BenchConfig;
use wmlab_harness::error::{HarnessError, Result};
use wmlab_harness::report::emit_report;

#[derive(Parser)]
#[command(name = "wmlab", version, about = "Watermark robustness lab")]
struct Cli {
    /// Seed for keys, messages and attack randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Image side length for generated scenes (scenegen, bench, calibrate).
    #[arg(long, global = true)]
    size: Option<usize>,
    /// Output file or directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed a watermark. Creates the key file from --seed if it does not exist.
    Embed {
        codec: CodecKind,
        input: PathBuf,
        key_file: PathBuf,
        /// 32-bit message as a 0/1 string; random from --seed when omitted.
        #[arg(long)]
        message: Option<BitMessage>,
    },
    /// Run detection and print the outcome as JSON.
    Detect {
        codec: CodecKind,
        input: PathBuf,
        key_file: PathBuf,
        /// Expected message, for bit accuracy.
        #[arg(long)]
        truth: Option<BitMessage>,
    },
    /// Apply an attack given in compact form, e.g. `blur:sigma=1`.
    Attack {
        spec: AttackSpec,
        input: PathBuf,
        /// Also write the preserved-pixel mask here.
        #[arg(long)]
        mask_out: Option<PathBuf>,
        /// Per-request timeout for external backends, in seconds.
        #[arg(long, default_value_t = 120.0)]
        timeout: f64,
    },
    /// Print MSE, PSNR, SSIM (and masked metrics with --mask) as JSON.
    Metric {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        mask: Option<PathBuf>,
    },
    /// Generate a scene and its ground-truth mask.
    Scenegen { prompt_seed: u64 },
    /// Run a benchmark grid and write reports.
    Bench {
        config: PathBuf,
        /// Worker threads (defaults to the config, then to all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check detector calibration on unwatermarked scenes.
    Calibrate {
        config: PathBuf,
        #[arg(long, default_value_t = 500)]
        trials: usize,
    },
}

fn read_image(path: &Path) -> Result<ImageF> {
    let bytes = std::fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(decode_png(&bytes)?)
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| HarnessError::io(path, e))
}

fn output(out: &Option<PathBuf>, default: &str) -> PathBuf {
    out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Writes to stdout, ignoring a closed pipe (e.g. `wmlab ... | head`).
fn print_json(v: &impl serde::Serialize) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(v).expect("serializable");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn load_key(codec: CodecKind, path: &Path) -> Result<Watermark> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let wm = Watermark::parse(&text)?;
    if wm.kind() != codec {
        return Err(HarnessError::config(format!(
            "{} holds a {} key, not {codec}",
            path.display(),
            wm.kind()
        )));
    }
    Ok(wm)
}

fn bench_config(path: &Path, cli: &Cli) -> Result<BenchConfig> {
    let mut cfg = BenchConfig::load(path)?;
    if let Some(size) = cli.size {
        cfg.image_size = size;
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Returns the process exit code on success paths that still need one.
fn run(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Embed {
            codec,
            input,
            key_file,
            message,
        } => {
            let img = read_image(input)?;
            let wm = if key_file.exists() {
                load_key(*codec, key_file)?
            } else {
                let wm = Watermark::new(*codec, cli.seed);
                write_bytes(key_file, wm.to_text().as_bytes())?;
                wm
            };
            let msg = message.unwrap_or_else(|| BitMessage::random(&mut RngStream::derived(cli.seed, "cli/message")));
            let marked = wm.embed(&img, &msg, derive_seed(cli.seed, "cli/carrier"))?;
            let out = output(&cli.out, "watermarked.png");
            write_bytes(&out, &encode_png(&marked))?;
            let psnr = wmlab::metrics::psnr(&img, &marked)?;
            print_json(&json!({
                "codec": codec,
                "output": out,
                "key_file": key_file,
                "message": codec.is_bit_codec().then(|| msg.to_string()),
                "psnr": if psnr.is_finite() { json!(psnr) } else { json!("inf") },
            }));
        }
        Command::Detect {
            codec,
            input,
            key_file,
            truth,
        } => {
            let img = read_image(input)?;
            let wm = load_key(*codec, key_file)?;
            let probe = truth.unwrap_or(BitMessage::new([false; 32]));
            match (wm.detect(&img, &probe)?, truth) {
                (DetectionOutcome::Bits(b), None) => {
                    print_json(&json!({ "kind": "bits", "extracted": b.extracted }))
                }
                (outcome, _) => print_json(&outcome),
            }
        }
        Command::Attack {
            spec,
            input,
            mask_out,
            timeout,
        } => {
            if !(*timeout > 0.0 && timeout.is_finite()) {
                return Err(HarnessError::config("--timeout must be > 0"));
            }
            let img = read_image(input)?;
            let mut ctx = AttackContext::new(cli.seed);
            ctx.backend_timeout = Duration::from_secs_f64(*timeout);
            let res = run_attack(&img, spec, &ctx)?;
            let out = output(&cli.out, "attacked.png");
            write_bytes(&out, &encode_png(&res.image))?;
            if let Some(m) = mask_out {
                write_bytes(m, &encode_mask_png(&res.preserved_mask))?;
            }
            print_json(&json!({
                "attack": spec.to_string(),
                "output": out,
                "prompt_used": res.prompt_used,
                "fallback_used": res.fallback_used,
                "preserved_coverage": res.preserved_mask.coverage(),
                "stages": res.stage_log,
            }));
        }
        Command::Metric { a, b, mask } => {
            let (ia, ib) = (read_image(a)?, read_image(b)?);
            let mask: Option<BinaryMask> = match mask {
                Some(p) => {
                    let bytes = std::fs::read(p).map_err(|e| HarnessError::io(p, e))?;
                    Some(decode_mask_png(&bytes)?)
                }
                None => None,
            };
            print_json(&QualityReport::measure(&ia, &ib, mask.as_ref())?);
        }
        Command::Scenegen { prompt_seed } => {
            let size = cli.size.unwrap_or(256);
            let scene = generate_scene(*prompt_seed, size)?;
            let out = output(&cli.out, &format!("scene_{prompt_seed}.png"));
            let mask_path = out.with_file_name(format!(
                "{}_mask.png",
                out.file_stem().and_then(|s| s.to_str()).unwrap_or("scene")
            ));
            write_bytes(&out, &encode_png(&scene.image))?;
            write_bytes(&mask_path, &encode_mask_png(&scene.gt_mask))?;
            let d = &scene.descriptor;
            print_json(&json!({
                "prompt_seed": prompt_seed,
                "size": size,
                "object": d.object_name,
                "background": d.background_name,
                "style": d.style_name,
                "coverage": scene.gt_mask.coverage(),
                "image": out,
                "mask": mask_path,
            }));
        }
        Command::Bench { config, workers } => {
            let mut cfg = bench_config(config, cli)?;
            if workers.is_some() {
                cfg.workers = *workers;
                cfg.validate()?;
            }
            let report = run_bench(&cfg)?;
            let written = emit_report(&report, &cfg.formats, &cfg.output_dir)?;
            for c in &report.cells {
                let v = c.aggregates.ave_value.map(|v| format!("{v:.4e}")).unwrap_or_else(|| "n/a".into());
                let flag = if c.removed == Some(true) { " removed" } else { "" };
                let failed = if c.has_failures() { format!(" ({} failed)", c.aggregates.failed) } else { String::new() };
                eprintln!("{:<10} {:<48} {v}{flag}{failed}", c.watermark.name(), c.attack);
            }
            use std::io::Write;
            for p in &written {
                let _ = writeln!(std::io::stdout().lock(), "{}", p.display());
            }
            if report.has_failures() {
                return Ok(2);
            }
        }
        Command::Calibrate { config, trials } => {
            let cfg = bench_config(config, cli)?;
            let record = calibrate_null(&cfg, *trials)?;
            std::fs::create_dir_all(&cfg.output_dir).map_err(|e| HarnessError::io(&cfg.output_dir, e))?;
            let path = cfg.output_dir.join("calibration.json");
            write_bytes(&path, serde_json::to_string_pretty(&record).expect("serializable").as_bytes())?;
            print_json(&record);
            if record.has_warning() {
                eprintln!("warning: null calibration outside the expected band");
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    // Usage errors are configuration errors (1); 2 is reserved for partial failure.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
