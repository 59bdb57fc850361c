use crate::error::{Error, Result};
use crate::image::{luminance, ImageF};

use super::dct::Block8Dct;

/// ITU-T T.81 Annex K luminance quantization table, row-major.
pub const LUMA_QUANT_BASE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Annex K table scaled by the usual quality rule.
pub fn jpeg_quant_table(quality: u8) -> Result<[f64; 64]> {
    if !(1..=100).contains(&quality) {
        return Err(Error::invalid(format!("JPEG quality must be in 1..=100, got {quality}")));
    }
    let q = quality as f64;
    let scale = if quality < 50 { 5000.0 / q } else { 200.0 - 2.0 * q };
    let mut t = [0.0; 64];
    for (dst, &base) in t.iter_mut().zip(LUMA_QUANT_BASE.iter()) {
        *dst = (base as f64 * scale / 100.0).round().clamp(1.0, 255.0);
    }
    Ok(t)
}

/// Quantization loss of baseline JPEG on the luminance plane only.
///
/// Luma is level-shifted to the 8-bit `[-128, 127]` range, each 8x8 block's
/// DCT coefficients are rounded to multiples of the table entries, and the
/// resulting luma change is added equally to R, G and B. No entropy coding,
/// subsampling or colour transform takes place.
pub fn jpeg_proxy(img: &ImageF, quality: u8) -> Result<ImageF> {
    let table = jpeg_quant_table(quality)?;
    let y = luminance(img);
    let shifted = y.map(|v| v * 255.0 - 128.0);
    let dct = Block8Dct::default();
    let quantized = dct.map_blocks(&shifted, |c| {
        for (v, q) in c.iter_mut().zip(table.iter()) {
            *v = (*v / q).round() * q;
        }
    });
    let delta = quantized.zip_map(&shifted, |a, b| (a - b) / 255.0)?;
    img.add_to_luma(&delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::GrayF;
    use crate::metrics::mse;
    use crate::rng::RngStream;

    #[test]
    fn quality_scaling() {
        assert!(jpeg_quant_table(100).unwrap().iter().all(|&v| v == 1.0));
        let q50 = jpeg_quant_table(50).unwrap();
        assert_eq!(q50[0], 16.0);
        assert_eq!(q50[63], 99.0);
        let q10 = jpeg_quant_table(10).unwrap();
        assert_eq!(q10[0], 80.0);
        assert_eq!(q10[63], 255.0);
        assert!(jpeg_quant_table(0).is_err());
        assert!(jpeg_quant_table(101).is_err());
    }

    #[test]
    fn constant_survives_quality_100() {
        let img = ImageF::filled(16, 16, [0.4, 0.5, 0.6]);
        let out = jpeg_proxy(&img, 100).unwrap();
        // DC step of 1 on an 8x8 orthonormal block is 1/8 level per pixel.
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() <= 0.5 / 8.0 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn low_quality_zeroes_most_ac() {
        let mut rng = RngStream::new(31);
        let img = ImageF::from_fn(64, 64, |_, _| {
            let v = 0.25 + 0.5 * rng.uniform();
            [v, v, v]
        });
        let out = jpeg_proxy(&img, 5).unwrap();
        let table = jpeg_quant_table(5).unwrap();
        let y = luminance(&out).map(|v| v * 255.0 - 128.0);
        let dct = Block8Dct::default();
        let (mut zeros, mut total) = (0usize, 0usize);
        for by in (0..64).step_by(8) {
            for bx in (0..64).step_by(8) {
                let mut blk = [0.0; 64];
                for j in 0..8 {
                    for i in 0..8 {
                        blk[j * 8 + i] = y.get(bx + i, by + j);
                    }
                }
                let c = dct.forward(&blk);
                for k in 1..64 {
                    total += 1;
                    if (c[k] / table[k]).round() == 0.0 {
                        zeros += 1;
                    }
                }
            }
        }
        let frac = zeros as f64 / total as f64;
        assert!(frac >= 0.9, "zero AC fraction {frac}");
    }

    #[test]
    fn mse_non_increasing_in_quality() {
        let mut rng = RngStream::new(32);
        let img = ImageF::from_fn(64, 64, |x, y| {
            let base = ((x as f64 * 0.2).sin() + (y as f64 * 0.13).cos()) * 0.2 + 0.5;
            [base + 0.1 * rng.uniform(), base, base - 0.1 * rng.uniform()]
        });
        let errs: Vec<f64> = [10, 50, 90]
            .iter()
            .map(|&q| mse(&img, &jpeg_proxy(&img, q).unwrap()).unwrap())
            .collect();
        assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{errs:?}");
    }

    #[test]
    fn idempotent_at_fixed_quality() {
        let mut rng = RngStream::new(33);
        let img = ImageF::from_fn(32, 24, |_, _| [rng.uniform(), rng.uniform(), rng.uniform()]);
        let once = jpeg_proxy(&img, 40).unwrap();
        let twice = jpeg_proxy(&once, 40).unwrap();
        let step = jpeg_quant_table(40).unwrap()[0] / 255.0;
        for (a, b) in once.data().iter().zip(twice.data()) {
            assert!((a - b).abs() <= step);
        }
        // Luma re-quantizes to the same lattice point.
        let d = luminance(&once).zip_map(&luminance(&twice), |a, b| (a - b).abs()).unwrap();
        assert!(d.data().iter().all(|&v| v < 1e-9), "{}", GrayF::mean(&d));
    }
}
