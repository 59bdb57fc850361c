use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_TAU_MAX: f64 = 0.85;
pub const DEFAULT_RINSE_CYCLES: u32 = 4;
pub const DEFAULT_RINSE_STRENGTH: f64 = 0.012;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    BuiltIn,
    /// Shell command line of a plugin process.
    External(String),
}

/// One attack with its parameters. The compact text form is
/// `name:key=value,key=value`, e.g. `blur:sigma=1` or
/// `semregen:tau=0.5,backend=exec:python3 adapter.py`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AttackSpec {
    Identity,
    Blur { sigma: f64 },
    JpegProxy { quality: u8 },
    Resize { factor: f64 },
    Noise { sigma: f64 },
    RegenProxy { strength: f64, steps: u32 },
    Rinse { cycles: u32, strength: f64, steps: u32 },
    SemanticRegen { tau: f64, tau_max: f64, backend: Backend },
}

impl AttackSpec {
    pub fn semantic_default() -> Self {
        AttackSpec::SemanticRegen {
            tau: DEFAULT_TAU,
            tau_max: DEFAULT_TAU_MAX,
            backend: Backend::BuiltIn,
        }
    }

    pub fn rinse(steps: u32) -> Self {
        AttackSpec::Rinse {
            cycles: DEFAULT_RINSE_CYCLES,
            strength: DEFAULT_RINSE_STRENGTH,
            steps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(format!("{self}: {m}")));
        match *self {
            AttackSpec::Identity => Ok(()),
            AttackSpec::Blur { sigma } if !(sigma > 0.0 && sigma.is_finite()) => bad("sigma must be > 0"),
            AttackSpec::JpegProxy { quality } if !(1..=100).contains(&quality) => bad("quality must be in 1..=100"),
            AttackSpec::Resize { factor } if !(factor > 0.0 && factor <= 1.0) => bad("factor must be in (0, 1]"),
            AttackSpec::Noise { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => bad("sigma must be >= 0"),
            AttackSpec::RegenProxy { strength, steps } | AttackSpec::Rinse { strength, steps, .. }
                if !(strength >= 0.0 && strength.is_finite()) || steps == 0 =>
            {
                bad("strength must be >= 0 and steps >= 1")
            }
            AttackSpec::Rinse { cycles: 0, .. } => bad("cycles must be >= 1"),
            AttackSpec::SemanticRegen { tau, tau_max, .. }
                if !(tau > 0.0 && tau < 1.0 && tau_max > tau && tau_max <= 1.0) =>
            {
                bad("need 0 < tau < 1 and tau < tau_max <= 1")
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackSpec::Identity => "identity",
            AttackSpec::Blur { .. } => "blur",
            AttackSpec::JpegProxy { .. } => "jpeg",
            AttackSpec::Resize { .. } => "resize",
            AttackSpec::Noise { .. } => "noise",
            AttackSpec::RegenProxy { .. } => "regen",
            AttackSpec::Rinse { .. } => "rinse",
            AttackSpec::SemanticRegen { .. } => "semregen",
        }
    }

    pub fn is_semantic(&self) -> bool {
        matches!(self, AttackSpec::SemanticRegen { .. })
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())?;
        match self {
            AttackSpec::Identity => Ok(()),
            AttackSpec::Blur { sigma } | AttackSpec::Noise { sigma } => write!(f, ":sigma={sigma}"),
            AttackSpec::JpegProxy { quality } => write!(f, ":quality={quality}"),
            AttackSpec::Resize { factor } => write!(f, ":factor={factor}"),
            AttackSpec::RegenProxy { strength, steps } => write!(f, ":strength={strength},steps={steps}"),
            AttackSpec::Rinse { cycles, strength, steps } => {
                write!(f, ":cycles={cycles},strength={strength},steps={steps}")
            }
            AttackSpec::SemanticRegen { tau, tau_max, backend } => {
                write!(f, ":tau={tau},tau_max={tau_max},backend=")?;
                match backend {
                    Backend::BuiltIn => write!(f, "builtin"),
                    Backend::External(cmd) => write!(f, "exec:{cmd}"),
                }
            }
        }
    }
}

struct Params<'a> {
    spec: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

impl<'a> Params<'a> {
    fn take<T: FromStr>(&mut self, name: &str, default: Option<T>) -> Result<T> {
        match self.pairs.iter().position(|(k, _)| *k == name) {
            Some(i) => {
                let (_, v) = self.pairs.remove(i);
                v.parse()
                    .map_err(|_| Error::invalid(format!("{}: cannot parse {name}={v}", self.spec)))
            }
            None => default.ok_or_else(|| Error::invalid(format!("{}: missing parameter {name}", self.spec))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.pairs.first() {
            Some((k, _)) => Err(Error::invalid(format!("{}: unknown parameter {k}", self.spec))),
            None => Ok(()),
        }
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        // The backend command may contain commas, so it always runs to the end.
        let (rest, backend) = match rest.find("backend=") {
            Some(i) => (rest[..i].trim_end_matches(','), Some(&rest[i + "backend=".len()..])),
            None => (rest, None),
        };
        let mut pairs = Vec::new();
        for item in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("{s}: expected key=value, got {item:?}")))?;
            pairs.push((k.trim(), v.trim()));
        }
        let mut p = Params { spec: s, pairs };
        let spec = match name {
            "identity" | "none" => AttackSpec::Identity,
            "blur" => AttackSpec::Blur { sigma: p.take("sigma", None)? },
            "jpeg" => AttackSpec::JpegProxy { quality: p.take("quality", None)? },
            "resize" => AttackSpec::Resize { factor: p.take("factor", None)? },
            "noise" => AttackSpec::Noise { sigma: p.take("sigma", None)? },
            "regen" => AttackSpec::RegenProxy {
                strength: p.take("strength", None)?,
                steps: p.take("steps", Some(1))?,
            },
            "rinse" => AttackSpec::Rinse {
                cycles: p.take("cycles", Some(DEFAULT_RINSE_CYCLES))?,
                strength: p.take("strength", Some(DEFAULT_RINSE_STRENGTH))?,
                steps: p.take("steps", None)?,
            },
            "semregen" => AttackSpec::SemanticRegen {
                tau: p.take("tau", Some(DEFAULT_TAU))?,
                tau_max: p.take("tau_max", Some(DEFAULT_TAU_MAX))?,
                backend: match backend.map(str::trim) {
                    None | Some("builtin") => Backend::BuiltIn,
                    Some(b) => match b.strip_prefix("exec:") {
                        Some(cmd) if !cmd.trim().is_empty() => Backend::External(cmd.trim().to_string()),
                        _ => return Err(Error::invalid(format!("{s}: backend must be builtin or exec:<command>"))),
                    },
                },
            },
            other => return Err(Error::invalid(format!("unknown attack {other:?}"))),
        };
        if backend.is_some() && !spec.is_semantic() {
            return Err(Error::invalid(format!("{s}: only semregen takes a backend")));
        }
        p.finish()?;
        spec.validate()?;
        Ok(spec)
    }
}
