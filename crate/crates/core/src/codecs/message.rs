use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub const MESSAGE_BITS: usize = 32;

/// Fixed 32-bit payload. Text form is 32 characters of `0`/`1`, bit 0 first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BitMessage {
    bits: [bool; MESSAGE_BITS],
}

impl BitMessage {
    pub fn new(bits: [bool; MESSAGE_BITS]) -> Self {
        Self { bits }
    }

    pub fn from_slice(bits: &[bool]) -> Result<Self> {
        let arr: [bool; MESSAGE_BITS] = bits.try_into().map_err(|_| {
            Error::invalid(format!("message must have {MESSAGE_BITS} bits, got {}", bits.len()))
        })?;
        Ok(Self { bits: arr })
    }

    pub fn random(rng: &mut RngStream) -> Self {
        let mut bits = [false; MESSAGE_BITS];
        bits.iter_mut().for_each(|b| *b = rng.coin());
        Self { bits }
    }

    pub fn bits(&self) -> &[bool; MESSAGE_BITS] {
        &self.bits
    }

    pub fn matches(&self, other: &BitMessage) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a == b).count()
    }

    pub fn accuracy(&self, truth: &BitMessage) -> f64 {
        self.matches(truth) as f64 / MESSAGE_BITS as f64
    }
}

impl fmt::Display for BitMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BitMessage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.len() != MESSAGE_BITS {
            return Err(Error::invalid(format!(
                "message must be {MESSAGE_BITS} characters of 0/1, got {} characters",
                s.len()
            )));
        }
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::invalid(format!("bad message character {other:?}"))),
            })
            .collect::<Result<_>>()?;
        Self::from_slice(&bits)
    }
}

impl Serialize for BitMessage {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitMessage {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitOutcome {
    pub extracted: BitMessage,
    pub bit_accuracy: f64,
}

impl BitOutcome {
    pub fn new(extracted: BitMessage, truth: &BitMessage) -> Self {
        Self {
            bit_accuracy: extracted.accuracy(truth),
            extracted,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PValueOutcome {
    pub score: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DetectionOutcome {
    Bits(BitOutcome),
    PValue(PValueOutcome),
}

impl DetectionOutcome {
    /// Bit accuracy or p-value, whichever this outcome carries.
    pub fn value(&self) -> f64 {
        match self {
            DetectionOutcome::Bits(b) => b.bit_accuracy,
            DetectionOutcome::PValue(p) => p.p_value,
        }
    }
}
