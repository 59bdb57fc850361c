//! DWT/DCT coefficient-pair watermark.
//!
//! Luminance → one-level Haar → full-plane DCT of the LL band. Each message
//! bit owns a mirrored pair of mid-band coefficients `(u, v)` / `(v, u)`;
//! the sign of their difference carries the bit.

use super::keyfile::KeyFields;
use super::message::{BitMessage, BitOutcome, MESSAGE_BITS};
use crate::error::{Error, Result};
use crate::image::{luminance, GrayF, ImageF};
use crate::rng::RngStream;
use crate::transforms::{dct2, haar_dwt2, haar_idwt2, idct2};

pub const MIN_DWTDCT_SIZE: usize = 64;
pub const BAND_MIN: usize = 20;
pub const BAND_MAX: usize = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct DwtDctKey {
    pub seed: u64,
    pub delta: f64,
}

/// Coordinates `(x, y)` in the LL-DCT grid.
pub type CoeffPair = ((usize, usize), (usize, usize));

impl DwtDctKey {
    pub const CODEC: &'static str = "dwtdct";

    pub fn new(seed: u64) -> Self {
        Self { seed, delta: 0.04 }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    /// 32 mirrored coefficient pairs with index sum in `[BAND_MIN, BAND_MAX]`.
    pub fn band(&self) -> Vec<CoeffPair> {
        let mut candidates: Vec<(usize, usize)> = (0..BAND_MAX)
            .flat_map(|u| (u + 1..=BAND_MAX).map(move |v| (u, v)))
            .filter(|&(u, v)| (BAND_MIN..=BAND_MAX).contains(&(u + v)))
            .collect();
        let mut rng = RngStream::derived(self.seed, "dwtdct/band");
        rng.shuffle(&mut candidates);
        candidates
            .into_iter()
            .take(MESSAGE_BITS)
            .map(|(u, v)| ((u, v), (v, u)))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::invalid(format!("delta must be finite and >= 0, got {}", self.delta)));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        KeyFields::new(Self::CODEC)
            .with("seed", self.seed)
            .with("delta", self.delta)
            .to_text()
    }

    pub fn from_fields(f: &KeyFields) -> Result<Self> {
        f.expect_codec(Self::CODEC)?;
        let key = Self {
            seed: f.get("seed")?,
            delta: f.get("delta")?,
        };
        key.validate()?;
        Ok(key)
    }
}

fn check_size(img: &ImageF) -> Result<()> {
    let (w, h) = img.dims();
    if w < MIN_DWTDCT_SIZE || h < MIN_DWTDCT_SIZE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: MIN_DWTDCT_SIZE,
        });
    }
    Ok(())
}

fn ll_dct(y: &GrayF) -> GrayF {
    dct2(&haar_dwt2(y).ll)
}

pub fn dwtdct_embed(img: &ImageF, msg: &BitMessage, key: &DwtDctKey) -> Result<ImageF> {
    key.validate()?;
    check_size(img)?;
    if key.delta == 0.0 {
        return Ok(img.clone());
    }
    let y = luminance(img);
    let mut pyr = haar_dwt2(&y);
    let mut coeffs = dct2(&pyr.ll);
    for (((x1, y1), (x2, y2)), &bit) in key.band().into_iter().zip(msg.bits()) {
        let (c1, c2) = (coeffs.get(x1, y1), coeffs.get(x2, y2));
        let d = c1 - c2;
        let need = if bit { key.delta - d } else { d + key.delta };
        if need > 0.0 {
            let half = need / 2.0;
            let s = if bit { 1.0 } else { -1.0 };
            coeffs.set(x1, y1, c1 + s * half);
            coeffs.set(x2, y2, c2 - s * half);
        }
    }
    pyr.ll = idct2(&coeffs);
    let marked = haar_idwt2(&pyr);
    img.add_to_luma(&marked.zip_map(&y, |a, b| a - b)?)
}

pub fn dwtdct_extract(img: &ImageF, key: &DwtDctKey, truth: &BitMessage) -> Result<BitOutcome> {
    check_size(img)?;
    let coeffs = ll_dct(&luminance(img));
    let bits: Vec<bool> = key
        .band()
        .into_iter()
        .map(|((x1, y1), (x2, y2))| coeffs.get(x1, y1) - coeffs.get(x2, y2) > 0.0)
        .collect();
    Ok(BitOutcome::new(BitMessage::from_slice(&bits)?, truth))
}
