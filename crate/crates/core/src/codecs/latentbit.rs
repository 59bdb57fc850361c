//! Latent-band bit watermark: 32 groups of carrier bins, each group signed by
//! one message bit.

use num_complex::Complex64;

use super::carrier::{
    annulus_bins, apply_carrier, build_carrier, check_square_pow2, complex_normal, invert_carrier,
    read_bin, FreqBin,
};
use super::keyfile::KeyFields;
use super::message::{BitMessage, BitOutcome, MESSAGE_BITS};
use super::ring::MIN_CARRIER_SIZE;
use crate::error::{Error, Result};
use crate::image::ImageF;
use crate::rng::RngStream;

pub const GROUP_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct LatentBitKey {
    pub seed: u64,
    /// Group annulus `[inner, outer)` at 256×256, scaled for other sizes.
    pub inner: f64,
    pub outer: f64,
    pub gamma: f64,
    pub inversion_sigma: f64,
}

type Group = Vec<(FreqBin, Complex64)>;

impl LatentBitKey {
    pub const CODEC: &'static str = "latentbit";

    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: 64.0,
            outer: 72.0,
            gamma: 0.025,
            inversion_sigma: 2.0,
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.inner > 0.0 && self.outer > self.inner) {
            return Err(Error::invalid("latent-bit radii must satisfy 0 < inner < outer"));
        }
        if !(self.gamma >= 0.0 && self.inversion_sigma > 0.0) {
            return Err(Error::invalid("gamma must be >= 0 and inversion sigma > 0"));
        }
        Ok(())
    }

    /// The 32 disjoint bin groups with their key values for an `n`×`n` image.
    pub fn groups(&self, n: usize) -> Result<Vec<Group>> {
        let s = n as f64 / 256.0;
        let mut bins = annulus_bins(n, self.inner * s, self.outer * s);
        if bins.len() < MESSAGE_BITS * GROUP_SIZE {
            return Err(Error::ImageTooSmall {
                width: n,
                height: n,
                min: 2 * n,
            });
        }
        let mut rng = RngStream::derived(self.seed, "latentbit/groups");
        rng.shuffle(&mut bins);
        let mut vals = RngStream::derived(self.seed, "latentbit/key");
        Ok(bins
            .chunks_exact(GROUP_SIZE)
            .take(MESSAGE_BITS)
            .map(|c| c.iter().map(|&b| (b, complex_normal(&mut vals))).collect())
            .collect())
    }

    pub fn to_text(&self) -> String {
        KeyFields::new(Self::CODEC)
            .with("seed", self.seed)
            .with("inner", self.inner)
            .with("outer", self.outer)
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
            gamma: f.get("gamma")?,
            inversion_sigma: f.get("inversion_sigma")?,
        };
        key.validate()?;
        Ok(key)
    }
}

pub fn latentbit_embed(scene: &ImageF, msg: &BitMessage, key: &LatentBitKey, noise_seed: u64) -> Result<ImageF> {
    key.validate()?;
    let n = check_square_pow2(scene.width(), scene.height(), MIN_CARRIER_SIZE)?;
    if key.gamma == 0.0 {
        return Ok(scene.clone());
    }
    let overrides: Vec<_> = key
        .groups(n)?
        .iter()
        .zip(msg.bits())
        .flat_map(|(g, &bit)| {
            let sign = if bit { 1.0 } else { -1.0 };
            g.iter().map(move |&(b, k)| (b, k * sign))
        })
        .collect();
    apply_carrier(scene, &build_carrier(n, noise_seed, &overrides), key.gamma)
}

pub fn latentbit_extract(img: &ImageF, key: &LatentBitKey, truth: &BitMessage) -> Result<BitOutcome> {
    key.validate()?;
    let n = check_square_pow2(img.width(), img.height(), MIN_CARRIER_SIZE)?;
    // With gamma = 0 there is no carrier to scale; correlate the raw residual.
    let gamma = if key.gamma > 0.0 { key.gamma } else { 1.0 };
    let spec = invert_carrier(img, gamma, key.inversion_sigma)?;
    let bits: Vec<bool> = key
        .groups(n)?
        .iter()
        .map(|g| g.iter().map(|&(b, k)| (read_bin(&spec, b) * k.conj()).re).sum::<f64>() > 0.0)
        .collect();
    Ok(BitOutcome::new(BitMessage::from_slice(&bits)?, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codecs::ring::{carrier_only, RingKey};
    use crate::scenegen::generate_scene;
    use std::collections::HashSet;

    #[test]
    fn groups_disjoint_and_clear_of_ring() {
        let key = LatentBitKey::new(3);
        let groups = key.groups(256).unwrap();
        assert_eq!(groups.len(), 32);
        let mut seen = HashSet::new();
        for g in &groups {
            assert_eq!(g.len(), GROUP_SIZE);
            for (b, _) in g {
                assert!(seen.insert(*b));
            }
        }
        let ring = RingKey::new(3);
        for b in ring.annulus(256).iter().chain(&ring.reference_bins(256)) {
            assert!(!seen.contains(b));
        }
    }

    #[test]
    fn round_trip_and_zero_gamma() {
        let s = generate_scene(6, 256).unwrap().image;
        let mut rng = RngStream::new(1);
        let msg = BitMessage::random(&mut rng);
        let key = LatentBitKey::new(12);
        let wm = latentbit_embed(&s, &msg, &key, 44).unwrap();
        assert_eq!(latentbit_extract(&wm, &key, &msg).unwrap().bit_accuracy, 1.0);
        let zero = key.clone().with_gamma(0.0);
        assert_eq!(latentbit_embed(&s, &msg, &zero, 44).unwrap(), s);
    }

    #[test]
    fn unrelated_carrier_reads_near_chance() {
        let key = LatentBitKey::new(2);
        let mut rng = RngStream::new(9);
        let mut total = 0.0;
        for seed in 0..20 {
            let s = generate_scene(seed, 256).unwrap().image;
            let img = carrier_only(&s, key.gamma, 500 + seed).unwrap();
            total += latentbit_extract(&img, &key, &BitMessage::random(&mut rng)).unwrap().bit_accuracy;
        }
        let mean = total / 20.0;
        assert!((mean - 0.5).abs() < 0.1, "{mean}");
    }

    #[test]
    fn key_text_round_trip() {
        let key = LatentBitKey::new(1234);
        let back = LatentBitKey::from_fields(&KeyFields::parse(&key.to_text()).unwrap()).unwrap();
        assert_eq!(back, key);
        assert_eq!(key.groups(256).unwrap(), back.groups(256).unwrap());
    }
}
