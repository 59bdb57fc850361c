//! The (watermark × attack × seed) grid.

use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wmlab::attacks::{run_attack, AttackContext, AttackSpec};
use wmlab::codecs::{BitMessage, CodecKind, DetectionOutcome};
use wmlab::metrics::{mssim, psnr_serde, QualityReport};
use wmlab::rng::{combine_seeds, derive_seed, RngStream};
use wmlab::scenegen::{describe_scene, generate_scene, Scene};

use crate::config::BenchConfig;
use crate::error::{HarnessError, Result};

/// p-values above this count as removal.
pub const P_REMOVED: f64 = 0.05;
/// Bit accuracies below this (24/32) count as removal.
pub const BITACC_REMOVED: f64 = 0.75;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub detection: Option<DetectionOutcome>,
    pub quality: Option<QualityReport>,
    /// mSSIM against the scene's ground-truth mask.
    pub mssim: Option<f64>,
    /// mSSIM over the attack's preserved region (semantic attacks only).
    pub preserved_mssim: Option<f64>,
    pub preserved_coverage: Option<f64>,
    pub fallback_used: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregates {
    pub succeeded: usize,
    pub failed: usize,
    /// Mean p-value (ring) or mean bit accuracy.
    pub ave_value: Option<f64>,
    pub median_value: Option<f64>,
    pub ave_mssim: Option<f64>,
    pub mssim_std: Option<f64>,
    pub mssim_ci95: Option<f64>,
    pub ave_ssim: Option<f64>,
    #[serde(with = "psnr_serde::option")]
    pub ave_psnr: Option<f64>,
    pub ave_mse: Option<f64>,
    pub ave_masked_mse: Option<f64>,
    #[serde(with = "psnr_serde::option")]
    pub ave_masked_psnr: Option<f64>,
    pub ave_preserved_mssim: Option<f64>,
    pub ave_preserved_coverage: Option<f64>,
}

fn mean_of(values: &[f64]) -> Option<f64> {
    wmlab::metrics::aggregate(values).ok().map(|s| s.mean)
}

impl CellAggregates {
    pub fn compute(records: &[SeedRecord]) -> Self {
        let ok: Vec<&SeedRecord> = records.iter().filter(|r| r.error.is_none()).collect();
        let pick = |f: &dyn Fn(&SeedRecord) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
        let values = pick(&|r| r.detection.map(|d| d.value()));
        let mssims = pick(&|r| r.mssim);
        let mssim_summary = wmlab::metrics::aggregate(&mssims).ok();
        Self {
            succeeded: ok.len(),
            failed: records.len() - ok.len(),
            ave_value: mean_of(&values),
            median_value: wmlab::metrics::median(&values).ok(),
            ave_mssim: mssim_summary.map(|s| s.mean),
            mssim_std: mssim_summary.map(|s| s.std),
            mssim_ci95: mssim_summary.map(|s| s.ci95_halfwidth),
            ave_ssim: mean_of(&pick(&|r| r.quality.map(|q| q.ssim))),
            ave_psnr: mean_of(&pick(&|r| r.quality.map(|q| q.psnr))),
            ave_mse: mean_of(&pick(&|r| r.quality.map(|q| q.mse))),
            ave_masked_mse: mean_of(&pick(&|r| r.quality.and_then(|q| q.masked_mse))),
            ave_masked_psnr: mean_of(&pick(&|r| r.quality.and_then(|q| q.masked_psnr))),
            ave_preserved_mssim: mean_of(&pick(&|r| r.preserved_mssim)),
            ave_preserved_coverage: mean_of(&pick(&|r| r.preserved_coverage)),
        }
    }

    /// Field-wise comparison within `tol` (infinities must match exactly).
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
            match (a, b) {
                (None, None) => true,
                (Some(x), Some(y)) if x.is_infinite() || y.is_infinite() => x == y,
                (Some(x), Some(y)) => (x - y).abs() <= tol,
                _ => false,
            }
        }
        let pairs = [
            (self.ave_value, other.ave_value),
            (self.median_value, other.median_value),
            (self.ave_mssim, other.ave_mssim),
            (self.mssim_std, other.mssim_std),
            (self.mssim_ci95, other.mssim_ci95),
            (self.ave_ssim, other.ave_ssim),
            (self.ave_psnr, other.ave_psnr),
            (self.ave_mse, other.ave_mse),
            (self.ave_masked_mse, other.ave_masked_mse),
            (self.ave_masked_psnr, other.ave_masked_psnr),
            (self.ave_preserved_mssim, other.ave_preserved_mssim),
            (self.ave_preserved_coverage, other.ave_preserved_coverage),
        ];
        self.succeeded == other.succeeded
            && self.failed == other.failed
            && pairs.iter().all(|&(a, b)| close(a, b, tol))
    }
}

/// Removal criterion for a cell's mean detection value.
pub fn is_removed(kind: CodecKind, ave_value: f64) -> bool {
    if kind.is_bit_codec() {
        ave_value < BITACC_REMOVED
    } else {
        ave_value > P_REMOVED
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub watermark: CodecKind,
    /// Compact attack text, unique within a report.
    pub attack: String,
    pub records: Vec<SeedRecord>,
    pub aggregates: CellAggregates,
    pub removed: Option<bool>,
}

impl BenchCell {
    pub fn new(watermark: CodecKind, attack: String, records: Vec<SeedRecord>) -> Self {
        let aggregates = CellAggregates::compute(&records);
        let removed = aggregates.ave_value.map(|v| is_removed(watermark, v));
        Self {
            watermark,
            attack,
            records,
            aggregates,
            removed,
        }
    }

    pub fn has_failures(&self) -> bool {
        self.aggregates.failed > 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub workers: usize,
    pub wall_seconds: f64,
    pub started_unix: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub tool: String,
    pub version: String,
    pub config: BenchConfig,
    pub cells: Vec<BenchCell>,
    pub metadata: RunMetadata,
}

impl BenchReport {
    pub fn cell(&self, watermark: CodecKind, attack: &AttackSpec) -> Option<&BenchCell> {
        let id = attack.to_string();
        self.cells.iter().find(|c| c.watermark == watermark && c.attack == id)
    }

    pub fn has_failures(&self) -> bool {
        self.cells.iter().any(BenchCell::has_failures)
    }

    /// Structured form without run metadata, for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.metadata = RunMetadata {
            workers: 0,
            wall_seconds: 0.0,
            started_unix: 0,
        };
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }

    /// Checks that every aggregate matches its records and that every
    /// configured cell is present.
    pub fn verify(&self) -> Result<()> {
        for w in &self.config.watermarks {
            for a in &self.config.attacks {
                if self.cell(*w, a).is_none() {
                    return Err(HarnessError::Report(format!("missing cell {w} × {a}")));
                }
            }
        }
        for c in &self.cells {
            if c.records.len() != self.config.seed_count {
                return Err(HarnessError::Report(format!(
                    "cell {} × {} has {} records, expected {}",
                    c.watermark,
                    c.attack,
                    c.records.len(),
                    self.config.seed_count
                )));
            }
            if !CellAggregates::compute(&c.records).approx_eq(&c.aggregates, 1e-12) {
                return Err(HarnessError::Report(format!(
                    "cell {} × {}: aggregates disagree with records",
                    c.watermark, c.attack
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: BenchReport =
            serde_json::from_str(text).map_err(|e| HarnessError::Report(format!("is not valid: {e}")))?;
        report.verify()?;
        Ok(report)
    }
}

/// Seeds for one (scene, watermark) pair and for one attack on it.
#[derive(Debug, Clone, Copy)]
pub struct CellSeeds {
    pub key: u64,
    pub message: u64,
    pub carrier: u64,
}

pub fn scene_seed(config: &BenchConfig, index: usize) -> u64 {
    config.base_seed.wrapping_add(index as u64)
}

pub fn cell_seeds(base_seed: u64, scene_seed: u64, watermark: CodecKind) -> CellSeeds {
    let root = combine_seeds(&[base_seed, scene_seed, derive_seed(0, watermark.name())]);
    CellSeeds {
        key: derive_seed(root, "key"),
        message: derive_seed(root, "message"),
        carrier: derive_seed(root, "carrier"),
    }
}

pub fn attack_seed(base_seed: u64, scene_seed: u64, watermark: CodecKind, attack: &AttackSpec) -> u64 {
    combine_seeds(&[
        base_seed,
        scene_seed,
        derive_seed(0, watermark.name()),
        derive_seed(0, &attack.to_string()),
    ])
}

fn failed_record(seed: u64, err: impl std::fmt::Display) -> SeedRecord {
    SeedRecord {
        seed,
        detection: None,
        quality: None,
        mssim: None,
        preserved_mssim: None,
        preserved_coverage: None,
        fallback_used: false,
        error: Some(err.to_string()),
    }
}

fn attack_record(
    config: &BenchConfig,
    scene: &Scene,
    marked: &wmlab::image::ImageF,
    wm: &wmlab::codecs::Watermark,
    truth: &BitMessage,
    attack: &AttackSpec,
    seed: u64,
) -> std::result::Result<SeedRecord, wmlab::error::Error> {
    let (a, b, c) = describe_scene(scene);
    let ctx = AttackContext {
        seed: attack_seed(config.base_seed, seed, wm.kind(), attack),
        caption_answers: Some([a, b, c]),
        backend_timeout: Duration::from_secs_f64(config.backend_timeout_secs),
    };
    let res = run_attack(marked, attack, &ctx)?;
    let detection = wm.detect(&res.image, truth)?;
    let quality = QualityReport::measure(marked, &res.image, Some(&scene.gt_mask))?;
    let (preserved_mssim, preserved_coverage) = if attack.is_semantic() {
        let m = if res.preserved_mask.is_empty() {
            None
        } else {
            Some(mssim(marked, &res.image, &res.preserved_mask)?)
        };
        (m, Some(res.preserved_mask.coverage()))
    } else {
        (None, None)
    };
    Ok(SeedRecord {
        seed,
        detection: Some(detection),
        mssim: quality.mssim,
        quality: Some(quality),
        preserved_mssim,
        preserved_coverage,
        fallback_used: res.fallback_used,
        error: None,
    })
}

/// All attacks on one watermarked scene, in config order.
fn run_item(config: &BenchConfig, kind: CodecKind, index: usize) -> Vec<SeedRecord> {
    let seed = scene_seed(config, index);
    let prepared = (|| -> std::result::Result<_, HarnessError> {
        let scene = generate_scene(seed, config.image_size)?;
        let seeds = cell_seeds(config.base_seed, seed, kind);
        let wm = config.watermark(kind, seeds.key)?;
        let truth = BitMessage::random(&mut RngStream::new(seeds.message));
        let marked = wm.embed(&scene.image, &truth, seeds.carrier)?;
        Ok((scene, wm, truth, marked))
    })();
    match prepared {
        Err(e) => config.attacks.iter().map(|_| failed_record(seed, &e)).collect(),
        Ok((scene, wm, truth, marked)) => config
            .attacks
            .iter()
            .map(|attack| {
                attack_record(config, &scene, &marked, &wm, &truth, attack, seed).unwrap_or_else(|e| failed_record(seed, e))
            })
            .collect(),
    }
}

pub fn worker_count(config: &BenchConfig) -> usize {
    config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Runs the grid. Failures inside a cell are recorded on the affected seed
/// records; only an invalid configuration aborts the run.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let workers = worker_count(config);
    let started = Instant::now();
    let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::config(format!("cannot start {workers} workers: {e}")))?;

    let mut kinds = config.watermarks.clone();
    kinds.sort();
    let items: Vec<(CodecKind, usize)> = kinds
        .iter()
        .flat_map(|&k| (0..config.seed_count).map(move |i| (k, i)))
        .collect();
    let results: Vec<Vec<SeedRecord>> =
        pool.install(|| items.par_iter().map(|&(k, i)| run_item(config, k, i)).collect());

    let mut cells = Vec::new();
    for (ki, &kind) in kinds.iter().enumerate() {
        let rows = &results[ki * config.seed_count..(ki + 1) * config.seed_count];
        let mut per_attack: Vec<(String, Vec<SeedRecord>)> =
            config.attacks.iter().map(|a| (a.to_string(), Vec::new())).collect();
        for row in rows {
            for (slot, rec) in per_attack.iter_mut().zip(row) {
                slot.1.push(rec.clone());
            }
        }
        per_attack.sort_by(|a, b| a.0.cmp(&b.0));
        cells.extend(per_attack.into_iter().map(|(id, recs)| BenchCell::new(kind, id, recs)));
    }

    let mut echo = config.clone();
    echo.workers = None;
    Ok(BenchReport {
        tool: "wmlab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: echo,
        cells,
        metadata: RunMetadata {
            workers,
            wall_seconds: started.elapsed().as_secs_f64(),
            started_unix,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use wmlab::codecs::{BitOutcome, PValueOutcome};

    fn rec(seed: u64, value: f64, err: bool) -> SeedRecord {
        SeedRecord {
            seed,
            detection: (!err).then_some(DetectionOutcome::PValue(PValueOutcome { score: 1.0, p_value: value })),
            quality: None,
            mssim: (!err).then_some(0.5 + value),
            preserved_mssim: None,
            preserved_coverage: None,
            fallback_used: false,
            error: err.then(|| "boom".to_string()),
        }
    }

    #[test]
    fn aggregates_skip_failed_records() {
        let recs = vec![rec(0, 0.1, false), rec(1, 0.3, false), rec(2, 0.0, true)];
        let agg = CellAggregates::compute(&recs);
        assert_eq!((agg.succeeded, agg.failed), (2, 1));
        assert!((agg.ave_value.unwrap() - 0.2).abs() < 1e-15);
        assert!((agg.median_value.unwrap() - 0.2).abs() < 1e-15);
        assert!((agg.ave_mssim.unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(agg.ave_psnr, None);
    }

    #[test]
    fn removal_thresholds() {
        assert!(is_removed(CodecKind::Ring, 0.10));
        assert!(!is_removed(CodecKind::Ring, 0.05));
        assert!(is_removed(CodecKind::DwtDct, 0.70));
        assert!(!is_removed(CodecKind::Spread, 0.76));
        assert!(!is_removed(CodecKind::LatentBit, 0.75));
    }

    #[test]
    fn bit_records_aggregate_accuracy() {
        let truth = BitMessage::new([true; 32]);
        let mut bits = [true; 32];
        bits[0] = false;
        let r = SeedRecord {
            detection: Some(DetectionOutcome::Bits(BitOutcome::new(BitMessage::new(bits), &truth))),
            ..rec(0, 0.0, false)
        };
        let cell = BenchCell::new(CodecKind::DwtDct, "identity".into(), vec![r]);
        assert_eq!(cell.aggregates.ave_value, Some(31.0 / 32.0));
        assert_eq!(cell.removed, Some(false));
    }

    #[test]
    fn seeds_depend_on_every_component() {
        let a = cell_seeds(1, 2, CodecKind::Ring);
        assert_ne!(a.key, cell_seeds(2, 2, CodecKind::Ring).key);
        assert_ne!(a.key, cell_seeds(1, 3, CodecKind::Ring).key);
        assert_ne!(a.key, cell_seeds(1, 2, CodecKind::DwtDct).key);
        assert_ne!(a.key, a.message);
        let blur = AttackSpec::Blur { sigma: 1.0 };
        assert_ne!(
            attack_seed(1, 2, CodecKind::Ring, &blur),
            attack_seed(1, 2, CodecKind::Ring, &AttackSpec::Identity)
        );
    }
}
