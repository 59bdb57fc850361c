//! Benchmark configuration, stored as a versioned TOML document.
//!
//! ```toml
//! format = "wmlab-bench"
//! version = 1
//! image_size = 256
//! seed_count = 100
//! base_seed = 0
//! watermarks = ["ring", "dwtdct"]
//! attacks = ["identity", "blur:sigma=1", "semregen:tau=0.5,tau_max=0.85,backend=builtin"]
//!
//! [codecs.ring]
//! gamma = 0.015
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wmlab::attacks::AttackSpec;
use wmlab::codecs::{BitMessage, CodecKind, Watermark};
use wmlab::image::ImageF;
use wmlab::scenegen::MIN_SCENE_SIZE;

use crate::error::{HarnessError, Result};

pub const CONFIG_FORMAT: &str = "wmlab-bench";
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Structured,
    Markdown,
    Svg,
}

impl ReportFormat {
    pub const ALL: [ReportFormat; 4] = [ReportFormat::Csv, ReportFormat::Structured, ReportFormat::Markdown, ReportFormat::Svg];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub format: String,
    pub version: u32,
    #[serde(default = "default_size")]
    pub image_size: usize,
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_watermarks")]
    pub watermarks: Vec<CodecKind>,
    #[serde(default = "default_attacks", with = "compact_attacks")]
    pub attacks: Vec<AttackSpec>,
    /// Per-codec parameter overrides, e.g. `[codecs.ring] gamma = 0.02`.
    #[serde(default)]
    pub codecs: BTreeMap<CodecKind, BTreeMap<String, f64>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Worker threads; absent means one per available core.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_formats")]
    pub formats: Vec<ReportFormat>,
    /// Per-request timeout for external stage backends.
    #[serde(default = "default_timeout")]
    pub backend_timeout_secs: f64,
}

fn default_size() -> usize {
    256
}
fn default_seed_count() -> usize {
    100
}
fn default_watermarks() -> Vec<CodecKind> {
    CodecKind::ALL.to_vec()
}
fn default_attacks() -> Vec<AttackSpec> {
    vec![
        AttackSpec::Identity,
        AttackSpec::Blur { sigma: 1.0 },
        AttackSpec::JpegProxy { quality: 50 },
        AttackSpec::rinse(1),
        AttackSpec::rinse(2),
        AttackSpec::rinse(3),
        AttackSpec::semantic_default(),
    ]
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("bench-out")
}
fn default_formats() -> Vec<ReportFormat> {
    ReportFormat::ALL.to_vec()
}
fn default_timeout() -> f64 {
    wmlab::attacks::DEFAULT_TIMEOUT.as_secs_f64()
}

/// Attacks are written in their compact text form.
mod compact_attacks {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use wmlab::attacks::AttackSpec;

    pub fn serialize<S: Serializer>(v: &[AttackSpec], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|a| a.to_string()).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<AttackSpec>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            format: CONFIG_FORMAT.into(),
            version: CONFIG_VERSION,
            image_size: default_size(),
            seed_count: default_seed_count(),
            base_seed: 0,
            watermarks: default_watermarks(),
            attacks: default_attacks(),
            codecs: BTreeMap::new(),
            output_dir: default_output_dir(),
            workers: None,
            formats: default_formats(),
            backend_timeout_secs: default_timeout(),
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: BenchConfig = toml::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            HarnessError::Config(m) => HarnessError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CONFIG_FORMAT {
            return Err(HarnessError::config(format!("format must be {CONFIG_FORMAT:?}, got {:?}", self.format)));
        }
        if self.version != CONFIG_VERSION {
            return Err(HarnessError::config(format!("unsupported config version {}", self.version)));
        }
        if self.seed_count == 0 {
            return Err(HarnessError::config("seed_count must be >= 1"));
        }
        if self.image_size < MIN_SCENE_SIZE {
            return Err(HarnessError::config(format!("image_size must be >= {MIN_SCENE_SIZE}")));
        }
        let needs_pow2 = self.watermarks.iter().any(|w| w.needs_pow2());
        if needs_pow2 && !self.image_size.is_power_of_two() {
            return Err(HarnessError::config(format!(
                "image_size {} must be a power of two for ring/latentbit",
                self.image_size
            )));
        }
        if self.watermarks.is_empty() || self.attacks.is_empty() {
            return Err(HarnessError::config("need at least one watermark and one attack"));
        }
        let mut seen = std::collections::BTreeSet::new();
        for w in &self.watermarks {
            if !seen.insert(*w) {
                return Err(HarnessError::config(format!("watermark {w} listed twice")));
            }
        }
        let mut ids = std::collections::BTreeSet::new();
        for a in &self.attacks {
            a.validate()?;
            if !ids.insert(a.to_string()) {
                return Err(HarnessError::config(format!("attack {a} listed twice")));
            }
        }
        if self.workers == Some(0) {
            return Err(HarnessError::config("workers must be >= 1"));
        }
        if !(self.backend_timeout_secs > 0.0 && self.backend_timeout_secs.is_finite()) {
            return Err(HarnessError::config("backend_timeout_secs must be > 0"));
        }
        for kind in self.codecs.keys() {
            self.watermark(*kind, 0)?;
        }
        // Dry-run each codec on a flat frame so size limits surface here
        // rather than as a grid of failed cells.
        let probe = ImageF::filled(self.image_size, self.image_size, [0.5; 3]);
        for &kind in &self.watermarks {
            self.watermark(kind, 0)?
                .embed(&probe, &BitMessage::new([false; 32]), 0)
                .map_err(|e| HarnessError::config(format!("{kind} at {} px: {e}", self.image_size)))?;
        }
        Ok(())
    }

    /// The key for `kind` with this config's overrides applied.
    pub fn watermark(&self, kind: CodecKind, seed: u64) -> Result<Watermark> {
        let base = Watermark::new(kind, seed);
        match self.codecs.get(&kind) {
            None => Ok(base),
            Some(over) => base
                .with_overrides(over.iter().map(|(k, v)| (k.as_str(), *v)))
                .map_err(|e| HarnessError::config(e.to_string())),
        }
    }
}
