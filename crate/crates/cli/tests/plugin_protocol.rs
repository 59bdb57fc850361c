//! External stage backends driven through the JSON-lines protocol, using the
//! Python fixture in `tests/fixtures`.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use wmlab::attacks::{run_attack, AttackContext, AttackSpec, Backend, DEFAULT_TAU, DEFAULT_TAU_MAX};
use wmlab::scenegen::generate_scene;
use wmlab::Error;

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/echo_backend.py")
}

fn spec(args: &str) -> AttackSpec {
    AttackSpec::SemanticRegen {
        tau: DEFAULT_TAU,
        tau_max: DEFAULT_TAU_MAX,
        backend: Backend::External(format!("python3 {} {args}", fixture().display())),
    }
}

fn run(args: &str, timeout: Duration) -> wmlab::Result<wmlab::attacks::AttackResult> {
    let scene = generate_scene(5, 64).unwrap();
    let mut ctx = AttackContext::new(1);
    ctx.backend_timeout = timeout;
    run_attack(&scene.image, &spec(args), &ctx)
}

fn failed_stage(r: wmlab::Result<wmlab::attacks::AttackResult>) -> (String, String) {
    match r {
        Err(Error::BackendFailure { stage, message }) => (stage, message),
        Err(e) => panic!("expected a backend failure, got {e}"),
        Ok(_) => panic!("expected a backend failure, got success"),
    }
}

#[test]
fn echo_backend_completes_every_stage() {
    let res = run("ok", Duration::from_secs(30)).unwrap();
    let scene = generate_scene(5, 64).unwrap();
    // The echo inpainter returns its input, so only 8-bit quantization remains.
    let max_diff = res.image.data().iter().zip(scene.image.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(max_diff <= 0.5 / 255.0 + 1e-12, "max diff {max_diff}");
    assert_eq!(res.prompt_used, "a grassy meadow");
    assert!(!res.fallback_used);
    // The fixture segments the centre quarter; that quarter is preserved.
    assert!((res.preserved_mask.coverage() - 0.25).abs() < 1e-9);
    assert!(res.preserved_mask.get(32, 32));
    assert!(!res.preserved_mask.get(2, 2));
    let stages: Vec<_> = res.stage_log.iter().map(|s| s.stage.as_str()).collect();
    for s in ["caption", "segment", "summarize", "inpaint"] {
        assert!(stages.contains(&s), "missing stage {s} in {stages:?}");
    }
}

#[test]
fn malformed_response_names_the_stage() {
    for stage in ["caption", "segment", "summarize", "inpaint"] {
        let (got, msg) = failed_stage(run(&format!("malformed {stage}"), Duration::from_secs(30)));
        assert_eq!(got, stage);
        assert!(msg.contains("malformed"), "{msg}");
    }
}

#[test]
fn backend_error_is_reported() {
    let (stage, msg) = failed_stage(run("error segment", Duration::from_secs(30)));
    assert_eq!(stage, "segment");
    assert!(msg.contains("model unavailable"));
}

#[test]
fn unsupported_handshake_is_rejected() {
    let (stage, msg) = failed_stage(run("badversion", Duration::from_secs(30)));
    assert_eq!(stage, "hello");
    assert!(msg.contains("protocol-version 9"), "{msg}");
}

#[test]
fn hung_backend_times_out_and_keeps_stderr() {
    let start = Instant::now();
    let (stage, msg) = failed_stage(run("hang summarize", Duration::from_millis(1500)));
    assert_eq!(stage, "summarize");
    assert!(msg.contains("timeout"), "{msg}");
    assert!(msg.contains("stuck in summarize"), "{msg}");
    assert!(start.elapsed() < Duration::from_secs(20));
}

#[test]
fn missing_command_is_a_backend_failure() {
    let scene = generate_scene(5, 64).unwrap();
    let spec = AttackSpec::SemanticRegen {
        tau: DEFAULT_TAU,
        tau_max: DEFAULT_TAU_MAX,
        backend: Backend::External("/nonexistent/backend-binary".into()),
    };
    let r = run_attack(&scene.image, &spec, &AttackContext::new(0));
    assert!(matches!(r, Err(Error::BackendFailure { .. })));
}

#[test]
fn failing_backend_marks_bench_cell_failed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bench.toml");
    let bad = spec("malformed inpaint").to_string();
    std::fs::write(
        &cfg,
        format!(
            "format = \"wmlab-bench\"\nversion = 1\nimage_size = 64\nseed_count = 2\nwatermarks = [\"spread\"]\n\
             attacks = [\"identity\", {bad:?}]\noutput_dir = {:?}\nformats = [\"structured\", \"markdown\"]\nworkers = 1\n",
            dir.path().join("out")
        ),
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_wmlab")).arg("bench").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let report = wmlab_harness::load_report(&dir.path().join("out/report.json")).unwrap();
    let ok = report.cells.iter().find(|c| c.attack == "identity").unwrap();
    assert_eq!(ok.aggregates.failed, 0);
    let broken = report.cells.iter().find(|c| c.attack != "identity").unwrap();
    assert_eq!(broken.aggregates.failed, 2);
    assert_eq!(broken.aggregates.succeeded, 0);
    assert!(broken.records.iter().all(|r| r.error.as_deref().is_some_and(|e| e.contains("inpaint"))));
    let md = std::fs::read_to_string(dir.path().join("out/tables.md")).unwrap();
    assert!(md.contains("[2 failed]"));
}
