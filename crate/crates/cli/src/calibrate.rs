//! Detector calibration on unwatermarked scenes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use wmlab::codecs::{BitMessage, CodecKind, DetectionOutcome};
use wmlab::rng::{derive_seed, RngStream};
use wmlab::scenegen::generate_scene;

use crate::bench::{cell_seeds, scene_seed, worker_count};
use crate::config::BenchConfig;
use crate::error::{HarnessError, Result};

pub const MIN_TRIALS: usize = 100;
pub const HISTOGRAM_BINS: usize = 20;
/// Acceptable band for the mean null p-value.
pub const P_MEAN_BAND: (f64, f64) = (0.45, 0.55);
/// Acceptable band for the fraction of null p-values below 0.05.
pub const P_LOW_BAND: (f64, f64) = (0.02, 0.09);
/// Acceptable band for the mean null bit accuracy.
pub const BITACC_BAND: (f64, f64) = (0.44, 0.56);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingCalibration {
    pub trials: usize,
    pub failures: usize,
    pub mean: f64,
    pub median: f64,
    pub fraction_below_005: f64,
    /// Counts over `[0, 0.05), [0.05, 0.10), ... [0.95, 1.0]`.
    pub histogram: Vec<usize>,
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitCalibration {
    pub codec: CodecKind,
    pub trials: usize,
    pub failures: usize,
    pub mean_accuracy: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub image_size: usize,
    pub base_seed: u64,
    pub ring: RingCalibration,
    pub bit_codecs: Vec<BitCalibration>,
}

impl CalibrationRecord {
    pub fn has_warning(&self) -> bool {
        self.ring.warning || self.bit_codecs.iter().any(|b| b.warning)
    }
}

fn in_band(v: f64, band: (f64, f64)) -> bool {
    v >= band.0 && v <= band.1
}

pub fn histogram(values: &[f64]) -> Vec<usize> {
    let mut h = vec![0; HISTOGRAM_BINS];
    for &v in values {
        let i = ((v * HISTOGRAM_BINS as f64) as usize).min(HISTOGRAM_BINS - 1);
        h[i] += 1;
    }
    h
}

/// Detects with a fresh key on the unwatermarked counterpart of each scene.
/// Bit codecs are scored against a random message.
fn null_value(config: &BenchConfig, kind: CodecKind, index: usize) -> std::result::Result<f64, HarnessError> {
    let seed = scene_seed(config, index);
    let scene = generate_scene(seed, config.image_size)?;
    let seeds = cell_seeds(derive_seed(config.base_seed, "calibrate"), seed, kind);
    let wm = config.watermark(kind, seeds.key)?;
    let img = wm.unmarked(&scene.image, seeds.carrier)?;
    let truth = BitMessage::random(&mut RngStream::new(seeds.message));
    Ok(match wm.detect(&img, &truth)? {
        DetectionOutcome::PValue(p) => p.p_value,
        DetectionOutcome::Bits(b) => b.bit_accuracy,
    })
}

/// Runs `trials` null detections for ring and for every bit codec in the
/// config.
pub fn calibrate_null(config: &BenchConfig, trials: usize) -> Result<CalibrationRecord> {
    if trials < MIN_TRIALS {
        return Err(HarnessError::config(format!("calibration needs at least {MIN_TRIALS} trials, got {trials}")));
    }
    let mut cfg = config.clone();
    cfg.seed_count = trials;
    if !cfg.watermarks.contains(&CodecKind::Ring) {
        cfg.watermarks.push(CodecKind::Ring);
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(&cfg))
        .build()
        .map_err(|e| HarnessError::config(e.to_string()))?;

    let mut kinds = cfg.watermarks.clone();
    kinds.sort();
    let run = |kind: CodecKind| -> (Vec<f64>, usize) {
        let results: Vec<_> = pool.install(|| (0..trials).into_par_iter().map(|i| null_value(&cfg, kind, i).ok()).collect());
        let failures = results.iter().filter(|r| r.is_none()).count();
        (results.into_iter().flatten().collect(), failures)
    };

    let (ps, ring_failures) = run(CodecKind::Ring);
    if ps.is_empty() {
        return Err(HarnessError::Report("every null ring detection failed".into()));
    }
    let mean = ps.iter().sum::<f64>() / ps.len() as f64;
    let below = ps.iter().filter(|&&p| p < 0.05).count() as f64 / ps.len() as f64;
    let ring = RingCalibration {
        trials,
        failures: ring_failures,
        mean,
        median: wmlab::metrics::median(&ps)?,
        fraction_below_005: below,
        histogram: histogram(&ps),
        warning: !in_band(mean, P_MEAN_BAND) || !in_band(below, P_LOW_BAND) || ring_failures > 0,
    };

    let mut bit_codecs = Vec::new();
    for kind in kinds.into_iter().filter(|k| k.is_bit_codec()) {
        let (accs, failures) = run(kind);
        let mean_accuracy = if accs.is_empty() { f64::NAN } else { accs.iter().sum::<f64>() / accs.len() as f64 };
        bit_codecs.push(BitCalibration {
            codec: kind,
            trials,
            failures,
            mean_accuracy,
            warning: !in_band(mean_accuracy, BITACC_BAND) || failures > 0,
        });
    }
    Ok(CalibrationRecord {
        image_size: cfg.image_size,
        base_seed: cfg.base_seed,
        ring,
        bit_codecs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_edges() {
        let h = histogram(&[0.0, 0.049, 0.05, 0.999, 1.0]);
        assert_eq!(h.len(), HISTOGRAM_BINS);
        assert_eq!(h[0], 2);
        assert_eq!(h[1], 1);
        assert_eq!(h[19], 2);
    }

    #[test]
    fn too_few_trials_is_config_error() {
        let cfg = BenchConfig::default();
        assert!(matches!(calibrate_null(&cfg, 50), Err(HarnessError::Config(_))));
    }
}
