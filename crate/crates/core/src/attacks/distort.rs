//! Parametric distortions and the noise-then-denoise regeneration proxies.

use crate::error::{Error, Result};
use crate::image::{GrayF, ImageF};
use crate::rng::RngStream;
use crate::transforms::{gaussian_blur, jpeg_proxy, resize_bilinear, Block8Dct};

use super::spec::AttackSpec;

/// Applies one of the distortion variants of `spec`.
pub fn apply_distortion(img: &ImageF, spec: &AttackSpec, rng: &mut RngStream) -> Result<ImageF> {
    spec.validate()?;
    match *spec {
        AttackSpec::Identity => Ok(img.clone()),
        AttackSpec::Blur { sigma } => gaussian_blur(img, sigma),
        AttackSpec::JpegProxy { quality } => jpeg_proxy(img, quality),
        AttackSpec::Resize { factor } => {
            let (w, h) = img.dims();
            let sw = ((w as f64 * factor).round() as usize).max(1);
            let sh = ((h as f64 * factor).round() as usize).max(1);
            resize_bilinear(&resize_bilinear(img, sw, sh)?, w, h)
        }
        AttackSpec::Noise { sigma } => {
            if sigma == 0.0 {
                return Ok(img.clone());
            }
            let data = img.data().iter().map(|v| v + sigma * rng.normal()).collect();
            ImageF::new(img.width(), img.height(), data)
        }
        AttackSpec::RegenProxy { strength, steps } => regen_proxy(img, strength, steps, rng),
        AttackSpec::Rinse { cycles, strength, steps } => rinse(img, cycles, strength, steps, rng),
        AttackSpec::SemanticRegen { .. } => Err(Error::invalid("semantic regeneration is not a distortion")),
    }
}

/// Smoothly compresses values outside `[0, 1]` into `(-0.1, 1.1)`.
fn soft_clamp(v: f64) -> f64 {
    const M: f64 = 0.1;
    if v > 1.0 {
        1.0 + M * ((v - 1.0) / M).tanh()
    } else if v < 0.0 {
        -M * (-v / M).tanh()
    } else {
        v
    }
}

/// Soft-thresholds every AC coefficient of every 8×8 block. The DC term is
/// left alone so the denoiser does not drift block means.
fn block_soft_threshold(plane: &GrayF, t: f64, dct: &Block8Dct) -> GrayF {
    dct.map_blocks(plane, |c| {
        for v in c.iter_mut().skip(1) {
            *v = v.signum() * (v.abs() - t).max(0.0);
        }
    })
}

/// `steps` rounds of: add N(0, strength²) per sample, then denoise by DCT
/// soft thresholding at `strength / 2`, then soft-clamp.
pub fn regen_proxy(img: &ImageF, strength: f64, steps: u32, rng: &mut RngStream) -> Result<ImageF> {
    if !(strength >= 0.0 && strength.is_finite()) || steps == 0 {
        return Err(Error::invalid("regen needs strength >= 0 and steps >= 1"));
    }
    if strength == 0.0 {
        return Ok(img.clone());
    }
    let dct = Block8Dct::default();
    let mut cur = img.clone();
    for _ in 0..steps {
        let noisy: Vec<f64> = cur.data().iter().map(|v| v + strength * rng.normal()).collect();
        let noisy = ImageF::new(cur.width(), cur.height(), noisy)?;
        let [r, g, b] = noisy.split_channels();
        let den = [r, g, b].map(|p| block_soft_threshold(&p, strength / 2.0, &dct).map(soft_clamp));
        cur = ImageF::merge_channels(&den[0], &den[1], &den[2])?;
    }
    Ok(cur)
}

/// `cycles` sequential applications of [`regen_proxy`].
pub fn rinse(img: &ImageF, cycles: u32, strength: f64, steps: u32, rng: &mut RngStream) -> Result<ImageF> {
    if cycles == 0 {
        return Err(Error::invalid("rinse needs cycles >= 1"));
    }
    let mut cur = img.clone();
    for _ in 0..cycles {
        cur = regen_proxy(&cur, strength, steps, rng)?;
    }
    Ok(cur)
}
