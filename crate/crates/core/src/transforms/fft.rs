use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::image::GrayF;

/// Complex-valued plane, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPlane {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexPlane {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != width * height || width == 0 || height == 0 {
            return Err(Error::invalid(format!(
                "complex plane {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub fn from_real(plane: &GrayF) -> Self {
        Self {
            width: plane.width(),
            height: plane.height(),
            data: plane.data().iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.data[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, c: Complex64) {
        self.data[v * self.width + u] = c;
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.data {
            *c *= s;
        }
    }

    /// Real parts as a plane.
    pub fn real(&self) -> GrayF {
        GrayF::new(
            self.width,
            self.height,
            self.data.iter().map(|c| c.re).collect(),
        )
        .expect("finite spectrum")
    }
}

fn transform_2d(width: usize, height: usize, data: &mut [Complex64], inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = |n: usize, planner: &mut FftPlanner<f64>| -> Arc<dyn Fft<f64>> {
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    let row_fft = plan(width, &mut planner);
    for row in data.chunks_exact_mut(width) {
        row_fft.process(row);
    }
    let col_fft = plan(height, &mut planner);
    let mut col = vec![Complex64::new(0.0, 0.0); height];
    for x in 0..width {
        for y in 0..height {
            col[y] = data[y * width + x];
        }
        col_fft.process(&mut col);
        for y in 0..height {
            data[y * width + x] = col[y];
        }
    }
}

/// Unnormalized forward 2-D DFT. Bin `(0, 0)` is the pixel sum.
pub fn fft2(plane: &GrayF) -> ComplexPlane {
    fft2_complex(&ComplexPlane::from_real(plane))
}

pub fn fft2_complex(plane: &ComplexPlane) -> ComplexPlane {
    let mut out = plane.clone();
    transform_2d(out.width, out.height, &mut out.data, false);
    out
}

/// Inverse 2-D DFT scaled by `1/(H*W)`, complex result.
pub fn ifft2_complex(spec: &ComplexPlane) -> ComplexPlane {
    let mut out = spec.clone();
    transform_2d(out.width, out.height, &mut out.data, true);
    out.scale(1.0 / (out.width * out.height) as f64);
    out
}

/// Inverse 2-D DFT keeping the real part. Callers that need a strictly real
/// result should supply a Hermitian-symmetric spectrum.
pub fn ifft2(spec: &ComplexPlane) -> GrayF {
    ifft2_complex(spec).real()
}
