//! Procedural foreground-on-background scenes with ground-truth masks.
//!
//! Each scene is one smooth blob (an ellipse whose radius is perturbed by up
//! to three harmonics) over a smooth band-limited background. The blob's palette is
//! chosen to contrast with the background so the object is visually
//! separable, and the mask is the exact rasterization of the blob.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::image::{luminance, BinaryMask, ImageF, LUMA_WEIGHTS};
use crate::rng::RngStream;

pub const MIN_SCENE_SIZE: usize = 64;

pub const OBJECTS: [&str; 12] = [
    "fox", "owl", "teapot", "lantern", "cactus", "sailboat", "mushroom", "violin", "tortoise",
    "pumpkin", "robot", "jellyfish",
];
pub const BACKGROUNDS: [&str; 10] = [
    "meadow", "desert", "harbor", "forest", "canyon", "glacier", "library", "nebula", "marketplace",
    "beach",
];
pub const STYLES: [&str; 10] = [
    "watercolor", "photographic", "cartoon", "impressionism", "charcoal", "pixel art", "ukiyo-e",
    "pop art", "oil painting", "low poly",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneDescriptor {
    pub object_name: String,
    pub background_name: String,
    pub style_name: String,
    pub prompt_seed: u64,
}

impl SceneDescriptor {
    pub fn from_seed(prompt_seed: u64) -> Self {
        let mut rng = RngStream::derived(prompt_seed, "scene/descriptor");
        Self {
            object_name: OBJECTS[rng.below(OBJECTS.len())].to_string(),
            background_name: BACKGROUNDS[rng.below(BACKGROUNDS.len())].to_string(),
            style_name: STYLES[rng.below(STYLES.len())].to_string(),
            prompt_seed,
        }
    }
}

/// Blob boundary in polar form around `(cx, cy)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobShape {
    pub cx: f64,
    pub cy: f64,
    pub radius_x: f64,
    pub radius_y: f64,
    pub rotation: f64,
    /// `(amplitude, phase)` for harmonics 1..=3.
    pub harmonics: Vec<(f64, f64)>,
}

impl BlobShape {
    /// Boundary radius along direction `theta` (in the blob's own frame),
    /// relative to the unperturbed ellipse.
    fn perturbation(&self, theta: f64) -> f64 {
        1.0 + self
            .harmonics
            .iter()
            .enumerate()
            .map(|(k, &(a, phi))| a * ((k + 1) as f64 * theta + phi).cos())
            .sum::<f64>()
    }

    /// Approximate signed distance in pixels to the boundary (negative
    /// inside), measured along the ray from the centre.
    pub fn signed_distance(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = self.rotation.sin_cos();
        let u = (dx * c + dy * s) / self.radius_x;
        let v = (-dx * s + dy * c) / self.radius_y;
        let r = (u * u + v * v).sqrt();
        let rho = self.perturbation(v.atan2(u));
        if r == 0.0 {
            return -rho * self.radius_x.min(self.radius_y);
        }
        (r - rho) / r * (dx * dx + dy * dy).sqrt()
    }

    /// True when the point lies inside the boundary.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = self.rotation.sin_cos();
        let u = (dx * c + dy * s) / self.radius_x;
        let v = (-dx * s + dy * c) / self.radius_y;
        let r = (u * u + v * v).sqrt();
        r <= self.perturbation(v.atan2(u))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub image: ImageF,
    pub gt_mask: BinaryMask,
    pub descriptor: SceneDescriptor,
    pub shape: BlobShape,
}

fn hue_rgb(hue: f64, sat: f64) -> [f64; 3] {
    let h = hue.rem_euclid(1.0) * 6.0;
    let f = h - h.floor();
    let (p, q, t) = (1.0 - sat, 1.0 - sat * f, 1.0 - sat * (1.0 - f));
    match h as u32 {
        0 => [1.0, t, p],
        1 => [q, 1.0, p],
        2 => [p, 1.0, t],
        3 => [p, q, 1.0],
        4 => [t, p, 1.0],
        _ => [1.0, p, q],
    }
}

/// A colour of the given hue/saturation scaled to the target Rec. 601 luma.
fn color_with_luma(hue: f64, sat: f64, luma: f64) -> [f64; 3] {
    let c = hue_rgb(hue, sat);
    let y: f64 = c.iter().zip(LUMA_WEIGHTS).map(|(a, w)| a * w).sum();
    let s = luma / y;
    let scaled = c.map(|v| v * s);
    let over = scaled.iter().cloned().fold(0.0, f64::max);
    if over <= 1.0 {
        return scaled;
    }
    // Desaturate towards gray until the brightest channel fits.
    let t = (over - 1.0) / (over - luma);
    scaled.map(|v| v + (luma - v) * t)
}

/// Width scale in pixels of the anti-aliased object edge.
const EDGE_SOFTNESS: f64 = 4.0;
/// Frequency bands (cycles per frame) of the background and object textures.
/// Keeping textures band-limited and periodic leaves mid and high spatial
/// frequencies almost empty.
const BG_BAND: (f64, f64) = (1.0, 6.0);
const FG_BAND: (f64, f64) = (4.0, 10.0);
const TEXTURE_WAVES: usize = 6;

/// Foreground weight across the edge: 1 well inside, 0 well outside.
fn edge_weight(d: f64) -> f64 {
    0.5 * (1.0 - (d * 1.128 / EDGE_SOFTNESS).tanh())
}

/// Sum of plane waves with integer frequencies in `band`, normalized to
/// `[-1, 1]`.
struct WaveTexture {
    waves: Vec<(f64, f64, f64, f64)>,
    norm: f64,
}

impl WaveTexture {
    fn new(rng: &mut RngStream, band: (f64, f64)) -> Self {
        let mut waves = Vec::with_capacity(TEXTURE_WAVES);
        while waves.len() < TEXTURE_WAVES {
            let fx = (2.0 * band.1 + 1.0) * rng.uniform() - band.1 - 0.5;
            let fy = (band.1 + 1.0) * rng.uniform() - 0.5;
            let (fx, fy) = (fx.round(), fy.round());
            let r = fx.hypot(fy);
            if r < band.0 || r > band.1 {
                continue;
            }
            let amp = 0.5 + 0.5 * rng.uniform();
            waves.push((fx, fy, amp, TAU * rng.uniform()));
        }
        let norm = waves.iter().map(|w| w.2).sum();
        Self { waves, norm }
    }

    /// Value at pixel-centre coordinates `(u, v)` in `[0, 1)` frame units.
    fn at(&self, u: f64, v: f64) -> f64 {
        self.waves
            .iter()
            .map(|&(fx, fy, a, ph)| a * (TAU * (fx * u + fy * v) + ph).cos())
            .sum::<f64>()
            / self.norm
    }
}

/// Generates the scene for `prompt_seed` at `size x size` pixels.
pub fn generate_scene(prompt_seed: u64, size: usize) -> Result<Scene> {
    if size < MIN_SCENE_SIZE {
        return Err(Error::invalid(format!(
            "scene size must be >= {MIN_SCENE_SIZE}, got {size}"
        )));
    }
    let descriptor = SceneDescriptor::from_seed(prompt_seed);
    let mut rng = RngStream::derived(prompt_seed, "scene/layout");
    let s = size as f64;

    // Palettes: background luma in [0.3, 0.7], foreground offset by 0.3..0.4
    // towards whichever side has room.
    let bg_hue = rng.uniform();
    let bg_luma = 0.3 + 0.4 * rng.uniform();
    let bg_a = color_with_luma(bg_hue, 0.35 + 0.3 * rng.uniform(), bg_luma - 0.12);
    let bg_b = color_with_luma(bg_hue + 0.08 + 0.1 * rng.uniform(), 0.3 + 0.3 * rng.uniform(), bg_luma + 0.12);
    let gap = 0.3 + 0.1 * rng.uniform();
    let fg_luma = if bg_luma < 0.5 { bg_luma + gap } else { bg_luma - gap };
    let fg_color = color_with_luma(bg_hue + 0.35 + 0.3 * rng.uniform(), 0.5 + 0.4 * rng.uniform(), fg_luma);

    // Blob geometry: target area fraction in [0.10, 0.35].
    let coverage = 0.10 + 0.25 * rng.uniform();
    let aspect = 0.75 + 0.5 * rng.uniform();
    let harmonics: Vec<(f64, f64)> = (0..3)
        .map(|k| (0.1 / (k + 1) as f64 * rng.uniform(), TAU * rng.uniform()))
        .collect();
    let area_gain = 1.0 + harmonics.iter().map(|(a, _)| a * a / 2.0).sum::<f64>();
    let mean_r = (coverage * s * s / (PI * area_gain)).sqrt();
    let (radius_x, radius_y) = (mean_r * aspect.sqrt(), mean_r / aspect.sqrt());
    let reach = radius_x.max(radius_y) * 1.2;
    let slack = (s / 2.0 - reach).max(0.0) * 0.6;
    let shape = BlobShape {
        cx: s / 2.0 + slack * (2.0 * rng.uniform() - 1.0),
        cy: s / 2.0 + slack * (2.0 * rng.uniform() - 1.0),
        radius_x,
        radius_y,
        rotation: PI * rng.uniform(),
        harmonics,
    };

    let bg_tex = WaveTexture::new(&mut rng, BG_BAND);
    let fg_tex = WaveTexture::new(&mut rng, FG_BAND);
    let gt_mask = BinaryMask::from_fn(size, size, |x, y| shape.contains(x as f64 + 0.5, y as f64 + 0.5));
    let image = ImageF::from_fn(size, size, |x, y| {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let n = fg_tex.at(px / s, py / s);
        let fg = fg_color.map(|c| c + 0.03 * n);
        let t = 0.5 + 0.5 * bg_tex.at(px / s, py / s);
        let bg: [f64; 3] = std::array::from_fn(|c| bg_a[c] + (bg_b[c] - bg_a[c]) * t);
        // Soft edge; pixels on the mask side stay at least half foreground.
        let d = shape.signed_distance(px, py);
        let w = if gt_mask.get(x, y) {
            edge_weight(d).max(0.5)
        } else {
            edge_weight(d).min(0.5)
        };
        std::array::from_fn(|c| bg[c] + (fg[c] - bg[c]) * w)
    });

    Ok(Scene {
        image,
        gt_mask,
        descriptor,
        shape,
    })
}

/// Perfect-oracle answers to the three captioning questions: object,
/// background, style.
pub fn describe_scene(scene: &Scene) -> (String, String, String) {
    let d = &scene.descriptor;
    (d.object_name.clone(), d.background_name.clone(), d.style_name.clone())
}

/// Mean luminance inside and outside the mask.
pub fn region_luma_means(img: &ImageF, mask: &BinaryMask) -> (f64, f64) {
    let y = luminance(img);
    let (mut fi, mut fo, mut ni, mut no) = (0.0, 0.0, 0usize, 0usize);
    for (v, &m) in y.data().iter().zip(mask.bits()) {
        if m {
            fi += v;
            ni += 1;
        } else {
            fo += v;
            no += 1;
        }
    }
    (fi / ni.max(1) as f64, fo / no.max(1) as f64)
}
