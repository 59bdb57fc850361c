use crate::error::{Error, Result};
use crate::image::{GrayF, ImageF};

/// Maps any integer index onto `[0, n)` by half-sample symmetric reflection
/// (`... c b a | a b c ...`), repeating as needed.
#[inline]
pub fn reflect_index(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Normalized 1-D Gaussian taps, radius `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("blur sigma must be > 0, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    Ok(k)
}

fn convolve_rows(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let r = (k.len() / 2) as isize;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &kv) in k.iter().enumerate() {
                acc += kv * row[reflect_index(x as isize + t as isize - r, w)];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

fn convolve_cols(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let r = (k.len() / 2) as isize;
    let mut out = vec![0.0; w * h];
    for (t, &kv) in k.iter().enumerate() {
        for y in 0..h {
            let sy = reflect_index(y as isize + t as isize - r, h);
            let src_row = &src[sy * w..(sy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += kv * s;
            }
        }
    }
    out
}

/// Separable Gaussian blur of a single plane.
pub fn gaussian_blur_gray(plane: &GrayF, sigma: f64) -> Result<GrayF> {
    let k = gaussian_kernel(sigma)?;
    let (w, h) = plane.dims();
    let tmp = convolve_rows(plane.data(), w, h, &k);
    GrayF::new(w, h, convolve_cols(&tmp, w, h, &k))
}

/// Separable Gaussian blur applied to each RGB channel.
pub fn gaussian_blur(img: &ImageF, sigma: f64) -> Result<ImageF> {
    let [r, g, b] = img.split_channels();
    ImageF::merge_channels(
        &gaussian_blur_gray(&r, sigma)?,
        &gaussian_blur_gray(&g, sigma)?,
        &gaussian_blur_gray(&b, sigma)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn reflection_mapping() {
        let got: Vec<usize> = (-3..7).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![2, 1, 0, 0, 1, 2, 3, 3, 2, 1]);
    }

    #[test]
    fn rejects_non_positive_sigma() {
        let img = ImageF::filled(4, 4, [0.5; 3]);
        assert!(matches!(gaussian_blur(&img, 0.0), Err(Error::InvalidParameter(_))));
        assert!(gaussian_blur(&img, -1.0).is_err());
    }

    #[test]
    fn constant_is_fixed_point() {
        let img = ImageF::filled(9, 7, [0.3, 0.6, 0.9]);
        for sigma in [0.4, 1.0, 3.5] {
            let out = gaussian_blur(&img, sigma).unwrap();
            for (a, b) in img.data().iter().zip(out.data()) {
                assert!((a - b).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn impulse_center_matches_discrete_peak() {
        // Oracle: squared central tap of the directly computed 1-D kernel.
        let sigma = 1.0f64;
        let taps: Vec<f64> = (-3i32..=3).map(|i| (-(i * i) as f64 / 2.0).exp()).collect();
        let peak_1d = 1.0 / taps.iter().sum::<f64>();
        let plane = GrayF::from_fn(21, 21, |x, y| if x == 10 && y == 10 { 1.0 } else { 0.0 });
        let out = gaussian_blur_gray(&plane, sigma).unwrap();
        assert!((out.get(10, 10) - peak_1d * peak_1d).abs() < 1e-12);
    }

    #[test]
    fn mean_preserved() {
        let mut rng = RngStream::new(13);
        let plane = GrayF::from_fn(17, 12, |_, _| rng.uniform());
        for sigma in [0.7, 2.0, 6.0] {
            let out = gaussian_blur_gray(&plane, sigma).unwrap();
            assert!((out.mean() - plane.mean()).abs() < 1e-5, "sigma {sigma}");
        }
    }

    #[test]
    fn linearity() {
        let mut rng = RngStream::new(14);
        let x = GrayF::from_fn(16, 16, |_, _| rng.uniform());
        let y = GrayF::from_fn(16, 16, |_, _| rng.uniform());
        let (a, b) = (0.7, -1.3);
        let combo = x.zip_map(&y, |p, q| a * p + b * q).unwrap();
        let lhs = gaussian_blur_gray(&combo, 1.5).unwrap();
        let bx = gaussian_blur_gray(&x, 1.5).unwrap();
        let by = gaussian_blur_gray(&y, 1.5).unwrap();
        for i in 0..lhs.data().len() {
            let rhs = a * bx.data()[i] + b * by.data()[i];
            assert!((lhs.data()[i] - rhs).abs() < 1e-5);
        }
    }
}
