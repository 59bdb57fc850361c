use std::f64::consts::PI;

use crate::image::GrayF;

/// Orthonormal DCT-II basis, `basis[k * n + i]` = alpha(k) cos(pi (2i+1) k / 2n).
pub fn dct_basis(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n * n];
    let a0 = (1.0 / n as f64).sqrt();
    let ak = (2.0 / n as f64).sqrt();
    for k in 0..n {
        let alpha = if k == 0 { a0 } else { ak };
        for i in 0..n {
            b[k * n + i] = alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
        }
    }
    b
}

/// Applies `basis` (or its transpose) along rows and then columns.
fn separable(plane: &GrayF, inverse: bool) -> GrayF {
    let (w, h) = plane.dims();
    let bw = dct_basis(w);
    let bh = dct_basis(h);
    let src = plane.data();
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for k in 0..w {
            let mut acc = 0.0;
            for i in 0..w {
                acc += row[i] * if inverse { bw[i * w + k] } else { bw[k * w + i] };
            }
            tmp[y * w + k] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for k in 0..h {
        for i in 0..h {
            let c = if inverse { bh[i * h + k] } else { bh[k * h + i] };
            if c == 0.0 {
                continue;
            }
            let src_row = &tmp[i * w..(i + 1) * w];
            let dst_row = &mut out[k * w..(k + 1) * w];
            for (d, s) in dst_row.iter_mut().zip(src_row) {
                *d += c * s;
            }
        }
    }
    GrayF::new(w, h, out).expect("finite transform")
}

/// Orthonormal 2-D DCT-II.
pub fn dct2(plane: &GrayF) -> GrayF {
    separable(plane, false)
}

/// Inverse of [`dct2`] (orthonormal DCT-III).
pub fn idct2(coeffs: &GrayF) -> GrayF {
    separable(coeffs, true)
}

/// Precomputed orthonormal 8x8 block DCT.
#[derive(Debug, Clone)]
pub struct Block8Dct {
    basis: Vec<f64>,
}

impl Default for Block8Dct {
    fn default() -> Self {
        Self {
            basis: dct_basis(8),
        }
    }
}

impl Block8Dct {
    pub fn forward(&self, block: &[f64; 64]) -> [f64; 64] {
        self.apply(block, false)
    }

    pub fn inverse(&self, coeffs: &[f64; 64]) -> [f64; 64] {
        self.apply(coeffs, true)
    }

    fn apply(&self, src: &[f64; 64], inverse: bool) -> [f64; 64] {
        let b = &self.basis;
        let m = |k: usize, i: usize| if inverse { b[i * 8 + k] } else { b[k * 8 + i] };
        let mut tmp = [0.0; 64];
        for y in 0..8 {
            for k in 0..8 {
                tmp[y * 8 + k] = (0..8).map(|i| src[y * 8 + i] * m(k, i)).sum();
            }
        }
        let mut out = [0.0; 64];
        for k in 0..8 {
            for x in 0..8 {
                out[k * 8 + x] = (0..8).map(|i| tmp[i * 8 + x] * m(k, i)).sum();
            }
        }
        out
    }

    /// Visits every 8x8 block of `plane` (edge blocks padded by replication),
    /// lets `f` rewrite its coefficients, and writes the inverse back.
    pub fn map_blocks(&self, plane: &GrayF, mut f: impl FnMut(&mut [f64; 64])) -> GrayF {
        let (w, h) = plane.dims();
        let mut out = plane.clone();
        for by in (0..h).step_by(8) {
            for bx in (0..w).step_by(8) {
                let mut block = [0.0; 64];
                for j in 0..8 {
                    for i in 0..8 {
                        let x = (bx + i).min(w - 1);
                        let y = (by + j).min(h - 1);
                        block[j * 8 + i] = plane.get(x, y);
                    }
                }
                let mut coeffs = self.forward(&block);
                f(&mut coeffs);
                let rec = self.inverse(&coeffs);
                for j in 0..8 {
                    for i in 0..8 {
                        let (x, y) = (bx + i, by + j);
                        if x < w && y < h {
                            out.set(x, y, rec[j * 8 + i]);
                        }
                    }
                }
            }
        }
        out
    }
}
