//! Fourier-domain noise carrier shared by the ring and latent-bit codecs.
//!
//! Spectra here use unitary scaling (`fft2 / sqrt(H*W)`), so a unit-variance
//! white plane has unit-variance complex bins. Only one bin of each
//! conjugate pair is addressed; its partner is written as the conjugate so
//! the spatial carrier stays real.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::image::{luminance, GrayF, ImageF};
use crate::rng::RngStream;
use crate::transforms::{fft2, gaussian_blur_gray, gaussian_kernel, ifft2, ComplexPlane};

/// Index of a spectrum bin as signed frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FreqBin {
    pub fu: i32,
    pub fv: i32,
}

impl FreqBin {
    pub fn radius(&self) -> f64 {
        ((self.fu * self.fu + self.fv * self.fv) as f64).sqrt()
    }

    fn index(&self, n: usize) -> usize {
        let u = self.fu.rem_euclid(n as i32) as usize;
        let v = self.fv.rem_euclid(n as i32) as usize;
        v * n + u
    }

    fn conjugate(&self) -> FreqBin {
        FreqBin {
            fu: -self.fu,
            fv: -self.fv,
        }
    }
}

/// Half-plane representatives with `inner <= radius < outer`, in a fixed
/// row-major order. DC and self-conjugate (Nyquist) bins are excluded.
pub fn annulus_bins(n: usize, inner: f64, outer: f64) -> Vec<FreqBin> {
    let half = (n / 2) as i32;
    let mut bins = Vec::new();
    for fv in 0..half {
        for fu in (-half + 1)..half {
            if fv == 0 && fu <= 0 {
                continue;
            }
            let b = FreqBin { fu, fv };
            let r = b.radius();
            if r >= inner && r < outer {
                bins.push(b);
            }
        }
    }
    bins
}

pub fn check_square_pow2(w: usize, h: usize, min: usize) -> Result<usize> {
    if w < min || h < min {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min,
        });
    }
    if w != h || !w.is_power_of_two() {
        return Err(Error::NonSquare {
            width: w,
            height: h,
        });
    }
    Ok(w)
}

/// Unitary spectrum of a square plane.
pub fn unitary_spectrum(plane: &GrayF) -> ComplexPlane {
    let mut spec = fft2(plane);
    let n = (plane.width() * plane.height()) as f64;
    spec.scale(1.0 / n.sqrt());
    spec
}

pub fn read_bin(spec: &ComplexPlane, bin: FreqBin) -> Complex64 {
    spec.data()[bin.index(spec.width())]
}

/// Writes `value` at `bin` and its conjugate at the mirrored bin.
pub fn write_bin(spec: &mut ComplexPlane, bin: FreqBin, value: Complex64) {
    let n = spec.width();
    spec.data_mut()[bin.index(n)] = value;
    spec.data_mut()[bin.conjugate().index(n)] = value.conj();
}

/// Complex Gaussian with variance `1/2` per component.
pub fn complex_normal(rng: &mut RngStream) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Complex64::new(s * rng.normal(), s * rng.normal())
}

/// Draws a unit white carrier from `noise_seed`, overwrites the given bins,
/// and returns the spatial carrier.
pub fn build_carrier(n: usize, noise_seed: u64, overrides: &[(FreqBin, Complex64)]) -> GrayF {
    let mut rng = RngStream::derived(noise_seed, "carrier/noise");
    let z = GrayF::from_fn(n, n, |_, _| rng.normal());
    let mut spec = unitary_spectrum(&z);
    for &(bin, value) in overrides {
        write_bin(&mut spec, bin, value);
    }
    spec.scale(n as f64);
    ifft2(&spec)
}

/// Adds `gamma * carrier` to the luminance of `img` (all three channels).
pub fn apply_carrier(img: &ImageF, carrier: &GrayF, gamma: f64) -> Result<ImageF> {
    if gamma == 0.0 {
        return Ok(img.clone());
    }
    img.add_to_luma(&carrier.map(|v| gamma * v))
}

/// Frequency response of the normalized 1-D kernel at bin `f` of an
/// `n`-point transform.
fn kernel_response(kernel: &[f64], f: usize, n: usize) -> f64 {
    let r = (kernel.len() / 2) as f64;
    kernel
        .iter()
        .enumerate()
        .map(|(t, w)| w * (std::f64::consts::TAU * f as f64 * (t as f64 - r) / n as f64).cos())
        .sum()
}

/// Carrier estimate: luminance minus its blur, divided by `gamma`, as a
/// unitary spectrum. Each bin is divided by the highpass response
/// `1 - H(f)` of the inversion blur so a white carrier comes back white;
/// bins where the response vanishes (DC) are zeroed.
pub fn invert_carrier(img: &ImageF, gamma: f64, inversion_sigma: f64) -> Result<ComplexPlane> {
    if !(gamma > 0.0) {
        return Err(Error::invalid("carrier gain must be > 0 for detection"));
    }
    let y = luminance(img);
    let smooth = gaussian_blur_gray(&y, inversion_sigma)?;
    let residual = y.zip_map(&smooth, |a, b| (a - b) / gamma)?;
    let mut spec = unitary_spectrum(&residual);
    let (w, h) = spec.dims();
    let kernel = gaussian_kernel(inversion_sigma)?;
    let hu: Vec<f64> = (0..w).map(|f| kernel_response(&kernel, f, w)).collect();
    let hv: Vec<f64> = (0..h).map(|f| kernel_response(&kernel, f, h)).collect();
    for v in 0..h {
        for u in 0..w {
            let gain = 1.0 - hu[u] * hv[v];
            let c = &mut spec.data_mut()[v * w + u];
            *c = if gain.abs() < 1e-6 { Complex64::new(0.0, 0.0) } else { *c / gain };
        }
    }
    Ok(spec)
}

pub fn mean_power(spec: &ComplexPlane, bins: &[FreqBin]) -> f64 {
    bins.iter().map(|&b| read_bin(spec, b).norm_sqr()).sum::<f64>() / bins.len() as f64
}
