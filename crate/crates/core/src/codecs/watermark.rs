//! One front end over the four codecs, keyed by a tagged key.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::dwtdct::{dwtdct_embed, dwtdct_extract, DwtDctKey};
use super::keyfile::KeyFields;
use super::latentbit::{latentbit_embed, latentbit_extract, LatentBitKey};
use super::message::{BitMessage, DetectionOutcome};
use super::ring::{carrier_only, ring_detect, ring_embed, RingKey};
use super::spread::{spread_embed, spread_extract, SpreadKey};
use crate::error::{Error, Result};
use crate::image::ImageF;

/// Codec identifiers, in canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodecKind {
    Ring,
    DwtDct,
    Spread,
    LatentBit,
}

impl CodecKind {
    pub const ALL: [CodecKind; 4] = [CodecKind::Ring, CodecKind::DwtDct, CodecKind::Spread, CodecKind::LatentBit];

    pub fn name(self) -> &'static str {
        match self {
            CodecKind::Ring => RingKey::CODEC,
            CodecKind::DwtDct => DwtDctKey::CODEC,
            CodecKind::Spread => SpreadKey::CODEC,
            CodecKind::LatentBit => LatentBitKey::CODEC,
        }
    }

    /// Ring reports a p-value; the others recover a bit message.
    pub fn is_bit_codec(self) -> bool {
        self != CodecKind::Ring
    }

    /// Whether the codec needs a square power-of-two image.
    pub fn needs_pow2(self) -> bool {
        matches!(self, CodecKind::Ring | CodecKind::LatentBit)
    }
}

impl fmt::Display for CodecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CodecKind::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown codec {s:?} (expected ring, dwtdct, spread or latentbit)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Watermark {
    Ring(RingKey),
    DwtDct(DwtDctKey),
    Spread(SpreadKey),
    LatentBit(LatentBitKey),
}

impl Watermark {
    pub fn new(kind: CodecKind, seed: u64) -> Self {
        match kind {
            CodecKind::Ring => Watermark::Ring(RingKey::new(seed)),
            CodecKind::DwtDct => Watermark::DwtDct(DwtDctKey::new(seed)),
            CodecKind::Spread => Watermark::Spread(SpreadKey::new(seed)),
            CodecKind::LatentBit => Watermark::LatentBit(LatentBitKey::new(seed)),
        }
    }

    pub fn kind(&self) -> CodecKind {
        match self {
            Watermark::Ring(_) => CodecKind::Ring,
            Watermark::DwtDct(_) => CodecKind::DwtDct,
            Watermark::Spread(_) => CodecKind::Spread,
            Watermark::LatentBit(_) => CodecKind::LatentBit,
        }
    }

    pub fn fields(&self) -> KeyFields {
        let text = self.to_text();
        KeyFields::parse(&text).expect("codec keys serialize to valid key files")
    }

    pub fn to_text(&self) -> String {
        match self {
            Watermark::Ring(k) => k.to_text(),
            Watermark::DwtDct(k) => k.to_text(),
            Watermark::Spread(k) => k.to_text(),
            Watermark::LatentBit(k) => k.to_text(),
        }
    }

    pub fn from_fields(f: &KeyFields) -> Result<Self> {
        Ok(match f.codec.parse::<CodecKind>().map_err(|e| Error::KeyFormat(e.to_string()))? {
            CodecKind::Ring => Watermark::Ring(RingKey::from_fields(f)?),
            CodecKind::DwtDct => Watermark::DwtDct(DwtDctKey::from_fields(f)?),
            CodecKind::Spread => Watermark::Spread(SpreadKey::from_fields(f)?),
            CodecKind::LatentBit => Watermark::LatentBit(LatentBitKey::from_fields(f)?),
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_fields(&KeyFields::parse(text)?)
    }

    /// Replaces named parameters. The seed cannot be overridden and unknown
    /// names are rejected.
    pub fn with_overrides<'a>(&self, overrides: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let mut fields = self.fields();
        for (name, value) in overrides {
            if name == "seed" || !fields.contains(name) {
                let known: Vec<&str> = fields.names().filter(|n| *n != "seed").collect();
                return Err(Error::InvalidParameter(format!(
                    "{} has no parameter {name:?} (known: {})",
                    self.kind(),
                    known.join(", ")
                )));
            }
            fields = fields.with(name, value);
        }
        Self::from_fields(&fields)
    }

    /// Embeds `msg` (ignored by ring). `noise_seed` draws the carrier for the
    /// Fourier codecs.
    pub fn embed(&self, img: &ImageF, msg: &BitMessage, noise_seed: u64) -> Result<ImageF> {
        match self {
            Watermark::Ring(k) => ring_embed(img, k, noise_seed),
            Watermark::DwtDct(k) => dwtdct_embed(img, msg, k),
            Watermark::Spread(k) => spread_embed(img, msg, k),
            Watermark::LatentBit(k) => latentbit_embed(img, msg, k, noise_seed),
        }
    }

    /// The unwatermarked counterpart of [`Watermark::embed`]: the Fourier
    /// codecs get a key-free carrier at the same gain, the others return the
    /// scene unchanged.
    pub fn unmarked(&self, img: &ImageF, noise_seed: u64) -> Result<ImageF> {
        match self {
            Watermark::Ring(k) => carrier_only(img, k.gamma, noise_seed),
            Watermark::LatentBit(k) => carrier_only(img, k.gamma, noise_seed),
            Watermark::DwtDct(_) | Watermark::Spread(_) => Ok(img.clone()),
        }
    }

    pub fn detect(&self, img: &ImageF, truth: &BitMessage) -> Result<DetectionOutcome> {
        Ok(match self {
            Watermark::Ring(k) => DetectionOutcome::PValue(ring_detect(img, k)?),
            Watermark::DwtDct(k) => DetectionOutcome::Bits(dwtdct_extract(img, k, truth)?),
            Watermark::Spread(k) => DetectionOutcome::Bits(spread_extract(img, k, truth)?),
            Watermark::LatentBit(k) => DetectionOutcome::Bits(latentbit_extract(img, k, truth)?),
        })
    }
}
