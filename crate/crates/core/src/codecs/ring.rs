//! Fourier-ring p-value watermark.
//!
//! A Gaussian carrier whose annulus bins are replaced by a secret key is added
//! to the scene luminance. Detection inverts the carrier with a highpass
//! residual and tests the annulus against the key with a non-central χ²
//! statistic. The null hypothesis is a key-free carrier, so an image that
//! carries an unrelated carrier (or a different key) gets a uniform p-value.

use num_complex::Complex64;

use super::carrier::{
    annulus_bins, apply_carrier, build_carrier, check_square_pow2, complex_normal, invert_carrier,
    mean_power, read_bin, FreqBin,
};
use super::keyfile::KeyFields;
use super::message::PValueOutcome;
use super::ncx2::ncx2_cdf;
use crate::error::{Error, Result};
use crate::image::ImageF;
use crate::rng::RngStream;

pub const MIN_CARRIER_SIZE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct RingKey {
    pub seed: u64,
    /// Key annulus `[inner, outer)` in frequency bins at 256×256; scaled
    /// proportionally for other sizes.
    pub inner: f64,
    pub outer: f64,
    /// Width of the reference bands on either side of the key annulus.
    pub reference_width: f64,
    pub gamma: f64,
    pub inversion_sigma: f64,
}

impl RingKey {
    pub const CODEC: &'static str = "ring";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: 50.0,
            outer: 51.0,
            reference_width: 8.0,
            gamma: 0.015,
            inversion_sigma: 2.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.inner > 0.0 && self.outer > self.inner && self.reference_width > 0.0) {
            return Err(Error::invalid("ring radii must satisfy 0 < inner < outer and width > 0"));
        }
        if !(self.inner - self.reference_width > 0.0) {
            return Err(Error::invalid("inner reference band would include DC"));
        }
        if !(self.gamma >= 0.0 && self.inversion_sigma > 0.0) {
            return Err(Error::invalid("gamma must be >= 0 and inversion sigma > 0"));
        }
        Ok(())
    }

    fn scale(n: usize) -> f64 {
        n as f64 / 256.0
    }

    pub fn annulus(&self, n: usize) -> Vec<FreqBin> {
        let s = Self::scale(n);
        annulus_bins(n, self.inner * s, self.outer * s)
    }

    pub fn reference_bins(&self, n: usize) -> Vec<FreqBin> {
        let s = Self::scale(n);
        let w = self.reference_width;
        let mut bins = annulus_bins(n, (self.inner - w) * s, self.inner * s);
        bins.extend(annulus_bins(n, self.outer * s, (self.outer + w) * s));
        bins
    }

    /// Key values for an `n`×`n` image, one complex normal per annulus bin.
    pub fn key_values(&self, n: usize) -> Vec<(FreqBin, Complex64)> {
        let mut rng = RngStream::derived(self.seed, "ring/key");
        self.annulus(n).into_iter().map(|b| (b, complex_normal(&mut rng))).collect()
    }

    pub fn to_text(&self) -> String {
        KeyFields::new(Self::CODEC)
            .with("seed", self.seed)
            .with("inner", self.inner)
            .with("outer", self.outer)
            .with("reference_width", self.reference_width)
            .with("gamma", self.gamma)
            .with("inversion_sigma", self.inversion_sigma)
            .to_text()
    }

    pub fn from_fields(f: &KeyFields) -> Result<Self> {
        f.expect_codec(Self::CODEC)?;
        let key = Self {
            seed: f.get("seed")?,
            inner: f.get("inner")?,
            outer: f.get("outer")?,
            reference_width: f.get("reference_width")?,
            gamma: f.get("gamma")?,
            inversion_sigma: f.get("inversion_sigma")?,
        };
        key.validate()?;
        Ok(key)
    }
}

pub fn ring_embed(scene: &ImageF, key: &RingKey, noise_seed: u64) -> Result<ImageF> {
    key.validate()?;
    let n = check_square_pow2(scene.width(), scene.height(), MIN_CARRIER_SIZE)?;
    if key.gamma == 0.0 {
        return Ok(scene.clone());
    }
    let carrier = build_carrier(n, noise_seed, &key.key_values(n));
    apply_carrier(scene, &carrier, key.gamma)
}

/// Scene plus a key-free carrier: the unwatermarked counterpart of
/// [`ring_embed`] for the same noise seed.
pub fn carrier_only(scene: &ImageF, gamma: f64, noise_seed: u64) -> Result<ImageF> {
    let n = check_square_pow2(scene.width(), scene.height(), MIN_CARRIER_SIZE)?;
    apply_carrier(scene, &build_carrier(n, noise_seed, &[]), gamma)
}

pub fn ring_detect(img: &ImageF, key: &RingKey) -> Result<PValueOutcome> {
    key.validate()?;
    let n = check_square_pow2(img.width(), img.height(), MIN_CARRIER_SIZE)?;
    let spec = invert_carrier(img, key.gamma, key.inversion_sigma)?;
    let sigma2 = mean_power(&spec, &key.reference_bins(n));
    if !(sigma2 >= 1e-12) {
        return Err(Error::DegenerateVariance(sigma2));
    }
    let keys = key.key_values(n);
    let half = sigma2 / 2.0;
    let eta: f64 = keys.iter().map(|&(b, k)| (read_bin(&spec, b) - k).norm_sqr()).sum::<f64>() / half;
    let lambda: f64 = keys.iter().map(|(_, k)| k.norm_sqr()).sum::<f64>() / half;
    let p_value = ncx2_cdf(eta, 2 * keys.len() as u32, lambda)?;
    Ok(PValueOutcome { score: eta, p_value })
}
