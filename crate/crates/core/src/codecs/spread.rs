//! Spread-spectrum stamp: 32 full-frame ±1 patterns, one per bit.

use super::keyfile::KeyFields;
use super::message::{BitMessage, BitOutcome, MESSAGE_BITS};
use crate::error::{Error, Result};
use crate::image::{luminance, GrayF, ImageF};
use crate::rng::RngStream;
use crate::transforms::gaussian_blur_gray;

/// Highpass used by the extractor to suppress scene correlation.
pub const RESIDUAL_SIGMA: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadKey {
    pub seed: u64,
    pub alpha: f64,
}

impl SpreadKey {
    pub const CODEC: &'static str = "spread";

    pub fn new(seed: u64) -> Self {
        Self { seed, alpha: 0.005 }
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    /// Pattern `i` as ±1 values, row-major.
    pub fn patterns(&self, width: usize, height: usize) -> Vec<Vec<i8>> {
        let mut rng = RngStream::derived(self.seed, "spread/patterns");
        (0..MESSAGE_BITS)
            .map(|_| {
                (0..width * height)
                    .map(|_| if rng.coin() { 1 } else { -1 })
                    .collect()
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be finite and >= 0, got {}", self.alpha)));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        KeyFields::new(Self::CODEC)
            .with("seed", self.seed)
            .with("alpha", self.alpha)
            .to_text()
    }

    pub fn from_fields(f: &KeyFields) -> Result<Self> {
        f.expect_codec(Self::CODEC)?;
        let key = Self {
            seed: f.get("seed")?,
            alpha: f.get("alpha")?,
        };
        key.validate()?;
        Ok(key)
    }
}

pub fn spread_embed(img: &ImageF, msg: &BitMessage, key: &SpreadKey) -> Result<ImageF> {
    key.validate()?;
    if key.alpha == 0.0 {
        return Ok(img.clone());
    }
    let (w, h) = img.dims();
    let mut delta = vec![0.0; w * h];
    for (p, &bit) in key.patterns(w, h).iter().zip(msg.bits()) {
        let s = if bit { key.alpha } else { -key.alpha };
        for (d, &v) in delta.iter_mut().zip(p) {
            *d += s * v as f64;
        }
    }
    img.add_to_luma(&GrayF::new(w, h, delta)?)
}

pub fn spread_extract(img: &ImageF, key: &SpreadKey, truth: &BitMessage) -> Result<BitOutcome> {
    let y = luminance(img);
    let residual = y.zip_map(&gaussian_blur_gray(&y, RESIDUAL_SIGMA)?, |a, b| a - b)?;
    let (w, h) = img.dims();
    let bits: Vec<bool> = key
        .patterns(w, h)
        .iter()
        .map(|p| residual.data().iter().zip(p).map(|(r, &v)| r * v as f64).sum::<f64>() > 0.0)
        .collect();
    Ok(BitOutcome::new(BitMessage::from_slice(&bits)?, truth))
}

/// Errors when `img` does not match the size a key file was made for.
pub fn check_pattern_size(img: &ImageF, width: usize, height: usize) -> Result<()> {
    if img.dims() != (width, height) {
        return Err(Error::DimensionMismatch {
            expected: (width, height),
            actual: img.dims(),
        });
    }
    Ok(())
}
