//! Built-in segmenter: spectral-residual saliency, Otsu threshold, connected
//! components.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::{luminance, BinaryMask, GrayF, ImageF};
use crate::transforms::{fft2, gaussian_blur_gray, ifft2_complex, resize_bilinear, ComplexPlane};

pub const MIN_SEGMENT_SIZE: usize = 64;
/// Saliency is computed at this width (the spectral-residual method is
/// scale dependent and tuned for coarse inputs).
pub const SALIENCY_WIDTH: usize = 64;
pub const SALIENCY_BLUR: f64 = 2.5;

/// Mean over non-overlapping `f`×`f` cells.
fn box_downsample(plane: &GrayF, f: usize) -> GrayF {
    let (w, h) = (plane.width() / f, plane.height() / f);
    let norm = (f * f) as f64;
    GrayF::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for j in 0..f {
            for i in 0..f {
                acc += plane.get(x * f + i, y * f + j);
            }
        }
        acc / norm
    })
}

fn resize_gray(plane: &GrayF, w: usize, h: usize) -> Result<GrayF> {
    let [r, _, _] = resize_bilinear(&plane.to_rgb(), w, h)?.split_channels();
    Ok(r)
}

/// 3×3 mean with wrap-around, the spectrum being periodic.
fn box3_wrap(plane: &GrayF) -> GrayF {
    let (w, h) = plane.dims();
    GrayF::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for dy in [h - 1, 0, 1] {
            for dx in [w - 1, 0, 1] {
                acc += plane.get((x + dx) % w, (y + dy) % h);
            }
        }
        acc / 9.0
    })
}

/// Spectral-residual saliency map at the plane's own resolution.
pub fn spectral_residual(plane: &GrayF) -> Result<GrayF> {
    let (w, h) = plane.dims();
    let spec = fft2(plane);
    let log_amp = GrayF::new(w, h, spec.data().iter().map(|c| (c.norm() + 1e-12).ln()).collect())?;
    let avg = box3_wrap(&log_amp);
    let data: Vec<Complex64> = spec
        .data()
        .iter()
        .zip(log_amp.data().iter().zip(avg.data()))
        .map(|(c, (l, a))| Complex64::from_polar((l - a).exp(), c.arg()))
        .collect();
    let back = ifft2_complex(&ComplexPlane::new(w, h, data)?);
    let sal = GrayF::new(w, h, back.data().iter().map(|c| c.norm_sqr()).collect())?;
    gaussian_blur_gray(&sal, SALIENCY_BLUR)
}

/// Otsu threshold over a 256-bin histogram; `None` when the values are
/// (numerically) constant.
pub fn otsu_threshold(values: &[f64]) -> Option<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !(hi - lo > 1e-12 * hi.abs().max(1e-300)) {
        return None;
    }
    const BINS: usize = 256;
    let mut hist = [0usize; BINS];
    let scale = (BINS - 1) as f64 / (hi - lo);
    for &v in values {
        hist[((v - lo) * scale) as usize] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_var) = (0usize, -1.0);
    for (i, &c) in hist.iter().enumerate().take(BINS - 1) {
        w0 += c as f64;
        sum0 += i as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (sum_all - sum0) / w1);
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if var > best_var {
            best_var = var;
            best = i;
        }
    }
    if best_var <= 0.0 {
        return None;
    }
    // Values strictly above the upper edge of bin `best` are foreground.
    Some(lo + (best as f64 + 1.0) / scale)
}

/// Adds enclosed holes (background components not touching the border).
fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = mask.dims();
    let mut out = mask.clone();
    for hole in mask.invert().components() {
        let touches = (0..w).any(|x| hole.get(x, 0) || hole.get(x, h - 1))
            || (0..h).any(|y| hole.get(0, y) || hole.get(w - 1, y));
        if !touches {
            out = out.union(&hole).expect("same dims");
        }
    }
    out
}

/// Ranked foreground candidates, largest first. A featureless image yields
/// an empty list.
pub fn builtin_segment(img: &ImageF) -> Result<Vec<BinaryMask>> {
    let (w, h) = img.dims();
    if w < MIN_SEGMENT_SIZE || h < MIN_SEGMENT_SIZE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: MIN_SEGMENT_SIZE,
        });
    }
    let y = luminance(img);
    let (lo, hi) = y.data().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if hi - lo < 1e-9 {
        return Ok(Vec::new());
    }
    let f = w / SALIENCY_WIDTH;
    let small = if f >= 2 && w % f == 0 && h % f == 0 {
        box_downsample(&y, f)
    } else {
        y.clone()
    };
    let sal = spectral_residual(&small)?;
    let sal = if sal.dims() == (w, h) { sal } else { resize_gray(&sal, w, h)? };
    let Some(t) = otsu_threshold(sal.data()) else {
        return Ok(Vec::new());
    };
    let fg = BinaryMask::from_fn(w, h, |x, y| sal.get(x, y) > t);
    let mut comps: Vec<BinaryMask> = fg.components().iter().map(|c| fill_holes(c).dilate(1)).collect();
    // Stable sort keeps discovery order among equal areas.
    comps.sort_by_key(|c| std::cmp::Reverse(c.count()));
    Ok(comps)
}
