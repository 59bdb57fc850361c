//! Built-in inpainter: harmonic fill plus texture-matched value noise.

use crate::error::{Error, Result};
use crate::image::{BinaryMask, GrayF, ImageF};
use crate::noise::value_noise;
use crate::rng::RngStream;

pub const MAX_ITERATIONS: usize = 2000;
pub const TOLERANCE: f64 = 1e-4;
/// Lattice spacing of the overlaid texture noise, in pixels. At 1 the noise is
/// sampled on its lattice and is spectrally white.
pub const NOISE_CELL: f64 = 1.0;
pub const BORDER_BAND: usize = 2;

/// Gauss–Seidel relaxation of the Laplace equation on `region`, with the
/// remaining pixels as fixed boundary values.
fn harmonic_fill(plane: &mut GrayF, region: &[usize], init: f64) {
    let (w, h) = plane.dims();
    let data = plane.data_mut();
    for &i in region {
        data[i] = init;
    }
    for _ in 0..MAX_ITERATIONS {
        let mut max_update: f64 = 0.0;
        for &i in region {
            let (x, y) = (i % w, i / w);
            let (mut acc, mut n) = (0.0, 0.0);
            if x > 0 {
                acc += data[i - 1];
                n += 1.0;
            }
            if x + 1 < w {
                acc += data[i + 1];
                n += 1.0;
            }
            if y > 0 {
                acc += data[i - w];
                n += 1.0;
            }
            if y + 1 < h {
                acc += data[i + w];
                n += 1.0;
            }
            let v = acc / n;
            max_update = max_update.max((v - data[i]).abs());
            data[i] = v;
        }
        if max_update < TOLERANCE {
            break;
        }
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Regenerates `region` (true = pixels to replace). The prompt is accepted
/// for interface parity; the built-in inpainter has no text conditioning.
pub fn builtin_inpaint(img: &ImageF, region: &BinaryMask, _prompt: &str, rng: &mut RngStream) -> Result<ImageF> {
    if img.dims() != region.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: region.dims(),
        });
    }
    if region.is_empty() {
        return Ok(img.clone());
    }
    if region.count() == region.bits().len() {
        return Err(Error::FullMask);
    }
    let (w, h) = img.dims();
    let idx: Vec<usize> = (0..w * h).filter(|&i| region.bits()[i]).collect();
    // Band straddling the region boundary, BORDER_BAND pixels either side.
    let grown = region.dilate(BORDER_BAND);
    let shrunk_out = region.invert().dilate(BORDER_BAND);
    let band: Vec<usize> = (0..w * h).filter(|&i| grown.bits()[i] && shrunk_out.bits()[i]).collect();

    let seed = rng.next_u64();
    let noise: Vec<f64> = idx
        .iter()
        .map(|&i| value_noise(seed, (i % w) as f64, (i / w) as f64, NOISE_CELL))
        .collect();
    let (nm, ns) = mean_std(noise.iter().copied());
    let ns = if ns > 0.0 { ns } else { 1.0 };

    let mut channels = img.split_channels();
    for ch in channels.iter_mut() {
        let (band_mean, band_std) = mean_std(band.iter().map(|&i| ch.data()[i]));
        harmonic_fill(ch, &idx, band_mean);
        let data = ch.data_mut();
        for (&i, &n) in idx.iter().zip(&noise) {
            data[i] += band_std * (n - nm) / ns;
        }
    }
    let filled = ImageF::merge_channels(&channels[0], &channels[1], &channels[2])?;
    // Bit-exact copy outside the region.
    crate::image::composite(&filled, img, region)
}
