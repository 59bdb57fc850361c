//! Seeded lattice value noise.

use crate::image::GrayF;
use crate::rng::{combine_seeds, splitmix64};

#[inline]
fn lattice(seed: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(combine_seeds(&[seed, ix as u64, iy as u64]));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[inline]
fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Single-octave value noise in `[0, 1)`, lattice spacing `cell` pixels.
pub fn value_noise(seed: u64, x: f64, y: f64, cell: f64) -> f64 {
    let fx = x / cell;
    let fy = y / cell;
    let (ix, iy) = (fx.floor() as i64, fy.floor() as i64);
    let (tx, ty) = (smoothstep(fx - ix as f64), smoothstep(fy - iy as f64));
    let v00 = lattice(seed, ix, iy);
    let v10 = lattice(seed, ix + 1, iy);
    let v01 = lattice(seed, ix, iy + 1);
    let v11 = lattice(seed, ix + 1, iy + 1);
    let top = v00 + (v10 - v00) * tx;
    let bot = v01 + (v11 - v01) * tx;
    top + (bot - top) * ty
}

/// Fractal sum of `octaves` value-noise layers; each octave halves the cell
/// size and scales amplitude by `persistence`. Normalized to `[0, 1)`.
pub fn fractal_noise(seed: u64, x: f64, y: f64, base_cell: f64, octaves: u32, persistence: f64) -> f64 {
    let mut total = 0.0;
    let mut norm = 0.0;
    let mut amp = 1.0;
    let mut cell = base_cell;
    for o in 0..octaves {
        total += amp * value_noise(splitmix64(seed ^ o as u64), x, y, cell);
        norm += amp;
        amp *= persistence;
        cell /= 2.0;
    }
    total / norm
}

/// Fills a plane with fractal noise.
pub fn fractal_plane(seed: u64, width: usize, height: usize, base_cell: f64, octaves: u32, persistence: f64) -> GrayF {
    GrayF::from_fn(width, height, |x, y| {
        fractal_noise(seed, x as f64 + 0.5, y as f64 + 0.5, base_cell, octaves, persistence)
    })
}
