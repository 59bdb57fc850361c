//! Image-quality metrics and summary statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ensure_same_dims, luminance, BinaryMask, GrayF, ImageF};

/// PSNR reported for identical images.
pub const PSNR_IDENTICAL: f64 = f64::INFINITY;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub mse: f64,
    #[serde(with = "psnr_serde")]
    pub psnr: f64,
    pub ssim: f64,
    pub mssim: Option<f64>,
    /// MSE and PSNR of the masked images (same masking as mSSIM).
    pub masked_mse: Option<f64>,
    #[serde(with = "psnr_serde::option")]
    pub masked_psnr: Option<f64>,
}

impl QualityReport {
    /// All unmasked metrics, plus the masked ones when a mask is given.
    pub fn measure(a: &ImageF, b: &ImageF, mask: Option<&BinaryMask>) -> Result<Self> {
        let mse = mse(a, b)?;
        let masked_mse = match mask {
            Some(m) => {
                ensure_same_dims(a.dims(), m.dims())?;
                Some(self::mse(&apply_mask(a, m), &apply_mask(b, m))?)
            }
            None => None,
        };
        Ok(Self {
            mse,
            psnr: psnr_from_mse(mse),
            ssim: ssim(a, b)?,
            mssim: mask.map(|m| mssim(a, b, m)).transpose()?,
            masked_mse,
            masked_psnr: masked_mse.map(psnr_from_mse),
        })
    }
}

/// Identical-image PSNR is written as the string `"inf"`.
pub mod psnr_serde {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad psnr value {s:?}"))),
        }
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match v {
                Some(v) => super::serialize(v, s),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            #[derive(Deserialize)]
            struct Wrap(#[serde(with = "super")] f64);
            Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
        }
    }
}

/// Mean of squared differences over every pixel and channel.
pub fn mse(a: &ImageF, b: &ImageF) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let n = a.data().len() as f64;
    Ok(a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / n)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_IDENTICAL
    } else {
        -10.0 * mse.log10()
    }
}

/// PSNR with peak 1.0.
pub fn psnr(a: &ImageF, b: &ImageF) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

fn ssim_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as i32;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Valid-mode separable filtering: output is `(w-10) x (h-10)`.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (t, &kv) in k.iter().enumerate() {
            let src_row = &tmp[(y + t) * ow..(y + t + 1) * ow];
            for (d, s) in out[y * ow..(y + 1) * ow].iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    out
}

fn ssim_planes(x: &GrayF, y: &GrayF) -> f64 {
    let (w, h) = x.dims();
    let k = ssim_window();
    let xd = x.data();
    let yd = y.data();
    let xx: Vec<f64> = xd.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = yd.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = xd.iter().zip(yd).map(|(a, b)| a * b).collect();
    let mx = filter_valid(xd, w, h, &k);
    let my = filter_valid(yd, w, h, &k);
    let sxx = filter_valid(&xx, w, h, &k);
    let syy = filter_valid(&yy, w, h, &k);
    let sxy = filter_valid(&xy, w, h, &k);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cxy = sxy[i] - ux * uy;
        let num = (2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2);
        let den = (ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2);
        total += num / den;
    }
    total / mx.len() as f64
}

/// SSIM on Rec. 601 luminance: 11x11 Gaussian window (sigma 1.5),
/// `C1 = (0.01)^2`, `C2 = (0.03)^2`, averaged over every valid window.
pub fn ssim(a: &ImageF, b: &ImageF) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let (w, h) = a.dims();
    if w.min(h) < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: SSIM_WINDOW,
        });
    }
    if a == b {
        return Ok(1.0);
    }
    Ok(ssim_planes(&luminance(a), &luminance(b)))
}

/// Zeroes every pixel outside `mask`.
pub fn apply_mask(img: &ImageF, mask: &BinaryMask) -> ImageF {
    let mut out = img.clone();
    for (px, &m) in out.data_mut().chunks_exact_mut(3).zip(mask.bits()) {
        let f = if m { 1.0 } else { 0.0 };
        px.iter_mut().for_each(|v| *v *= f);
    }
    out
}

/// Masked SSIM: both images are multiplied by the mask (outside pixels become
/// zero in both) and SSIM is taken over the products.
pub fn mssim(a: &ImageF, b: &ImageF, mask: &BinaryMask) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    ensure_same_dims(a.dims(), mask.dims())?;
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    ssim(&apply_mask(a, mask), &apply_mask(b, mask))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
    pub ci95_halfwidth: f64,
}

/// Sample mean, `n-1` standard deviation (zero for a single value) and the
/// normal-approximation 95% half-width.
pub fn aggregate(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Summary {
        mean,
        std,
        count: n,
        ci95_halfwidth: 1.96 * std / (n as f64).sqrt(),
    })
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Ok(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}
