//! Raster and mask primitives.
//!
//! Pixels are `f64` in a nominal `[0, 1]` range. Values may leave that range
//! inside a pipeline; they are clamped only when exported to 8-bit PNG.

use std::collections::VecDeque;
use std::io::Cursor;

use image::{ColorType, DynamicImage, ImageFormat};

use crate::error::{Error, Result};

/// Rec. 601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Floating-point RGB raster, row-major, channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageF {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageF {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != width * height * 3 {
            return Err(Error::invalid(format!(
                "expected {} samples for {}x{} RGB, got {}",
                width * height * 3,
                width,
                height,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("image contains non-finite values"));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Self {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f64; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f64; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn clamp01(&self) -> ImageF {
        ImageF {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        }
    }

    /// Splits into R, G, B planes.
    pub fn split_channels(&self) -> [GrayF; 3] {
        let n = self.width * self.height;
        let mut planes = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for (i, px) in self.data.chunks_exact(3).enumerate() {
            for c in 0..3 {
                planes[c][i] = px[c];
            }
        }
        planes.map(|data| GrayF {
            width: self.width,
            height: self.height,
            data,
        })
    }

    pub fn merge_channels(r: &GrayF, g: &GrayF, b: &GrayF) -> Result<ImageF> {
        ensure_same_dims(r.dims(), g.dims())?;
        ensure_same_dims(r.dims(), b.dims())?;
        let data = r
            .data
            .iter()
            .zip(&g.data)
            .zip(&b.data)
            .flat_map(|((&r, &g), &b)| [r, g, b])
            .collect();
        Ok(ImageF {
            width: r.width,
            height: r.height,
            data,
        })
    }

    /// Adds `delta` to all three channels of each pixel, which shifts Rec. 601
    /// luminance by exactly `delta`.
    pub fn add_to_luma(&self, delta: &GrayF) -> Result<ImageF> {
        ensure_same_dims(self.dims(), delta.dims())?;
        let mut out = self.clone();
        for (px, d) in out.data.chunks_exact_mut(3).zip(&delta.data) {
            px[0] += d;
            px[1] += d;
            px[2] += d;
        }
        Ok(out)
    }
}

/// Single-channel floating-point plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayF {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayF {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("plane dimensions must be positive"));
        }
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} samples for {}x{} plane, got {}",
                width * height,
                width,
                height,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("plane contains non-finite values"));
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
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
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

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayF {
        GrayF {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &GrayF, f: impl Fn(f64, f64) -> f64) -> Result<GrayF> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(GrayF {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn to_rgb(&self) -> ImageF {
        ImageF {
            width: self.width,
            height: self.height,
            data: self.data.iter().flat_map(|&v| [v, v, v]).collect(),
        }
    }
}

/// Per-pixel mask, `true` marks foreground (the preserved region).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::invalid(format!(
                "expected {} mask bits, got {}",
                width * height,
                bits.len()
            )));
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            bits: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            bits,
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.bits[y * self.width + x] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn coverage(&self) -> f64 {
        self.count() as f64 / self.bits.len() as f64
    }

    pub fn invert(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn union(&self, other: &BinaryMask) -> Result<BinaryMask> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b).collect(),
        })
    }

    pub fn intersection_count(&self, other: &BinaryMask) -> Result<usize> {
        ensure_same_dims(self.dims(), other.dims())?;
        Ok(self.bits.iter().zip(&other.bits).filter(|(a, b)| **a && **b).count())
    }

    pub fn iou(&self, other: &BinaryMask) -> Result<f64> {
        let inter = self.intersection_count(other)?;
        let union = self.count() + other.count() - inter;
        Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
    }

    /// 3x3 box dilation applied `iterations` times.
    pub fn dilate(&self, iterations: usize) -> BinaryMask {
        let (w, h) = (self.width, self.height);
        let mut cur = self.clone();
        for _ in 0..iterations {
            let next = BinaryMask::from_fn(w, h, |x, y| {
                let y0 = y.saturating_sub(1);
                let y1 = (y + 1).min(h - 1);
                let x0 = x.saturating_sub(1);
                let x1 = (x + 1).min(w - 1);
                (y0..=y1).any(|yy| (x0..=x1).any(|xx| cur.get(xx, yy)))
            });
            cur = next;
        }
        cur
    }

    /// 4-connected components in discovery order (row-major scan of their
    /// first pixel).
    pub fn components(&self) -> Vec<BinaryMask> {
        let (w, h) = (self.width, self.height);
        let mut label = vec![usize::MAX; w * h];
        let mut out = Vec::new();
        let mut queue = VecDeque::new();
        for start in 0..w * h {
            if !self.bits[start] || label[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut comp = BinaryMask::filled(w, h, false);
            label[start] = id;
            queue.push_back(start);
            while let Some(i) = queue.pop_front() {
                comp.bits[i] = true;
                let (x, y) = (i % w, i / w);
                let mut visit = |j: usize| {
                    if self.bits[j] && label[j] == usize::MAX {
                        label[j] = id;
                        queue.push_back(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < w {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - w);
                }
                if y + 1 < h {
                    visit(i + w);
                }
            }
            out.push(comp);
        }
        out
    }

    /// Keeps only the largest 4-connected component. Ties go to the component
    /// found first in row-major order.
    pub fn largest_component(&self) -> BinaryMask {
        let mut best: Option<(usize, BinaryMask)> = None;
        for comp in self.components() {
            let n = comp.count();
            if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
                best = Some((n, comp));
            }
        }
        best.map(|(_, m)| m)
            .unwrap_or_else(|| BinaryMask::filled(self.width, self.height, false))
    }

    /// Axis-aligned ellipse centred in the frame, scaled so its area is
    /// `coverage` of the image.
    pub fn centered_ellipse(width: usize, height: usize, coverage: f64) -> BinaryMask {
        let aspect = width as f64 / height as f64;
        // pi * a * b = coverage * w * h with a / b = aspect
        let b = (coverage * (width * height) as f64 / (std::f64::consts::PI * aspect)).sqrt();
        let a = b * aspect;
        let cx = width as f64 / 2.0;
        let cy = height as f64 / 2.0;
        BinaryMask::from_fn(width, height, |x, y| {
            let dx = (x as f64 + 0.5 - cx) / a;
            let dy = (y as f64 + 0.5 - cy) / b;
            dx * dx + dy * dy <= 1.0
        })
    }

    pub fn to_gray(&self) -> GrayF {
        GrayF {
            width: self.width,
            height: self.height,
            data: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

pub(crate) fn ensure_same_dims(expected: (usize, usize), actual: (usize, usize)) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch { expected, actual });
    }
    Ok(())
}

/// Rec. 601 luminance plane.
pub fn luminance(img: &ImageF) -> GrayF {
    let [wr, wg, wb] = LUMA_WEIGHTS;
    GrayF {
        width: img.width,
        height: img.height,
        data: img
            .data
            .chunks_exact(3)
            .map(|p| wr * p[0] + wg * p[1] + wb * p[2])
            .collect(),
    }
}

/// `fg` where the mask is set, `bg` elsewhere. Foreground samples are copied
/// bit-for-bit.
pub fn composite(fg: &ImageF, bg: &ImageF, mask: &BinaryMask) -> Result<ImageF> {
    ensure_same_dims(fg.dims(), bg.dims())?;
    ensure_same_dims(fg.dims(), mask.dims())?;
    let mut out = bg.clone();
    for (i, &keep) in mask.bits.iter().enumerate() {
        if keep {
            out.data[i * 3..i * 3 + 3].copy_from_slice(&fg.data[i * 3..i * 3 + 3]);
        }
    }
    Ok(out)
}

pub fn mask_coverage(mask: &BinaryMask) -> f64 {
    mask.coverage()
}

pub fn largest_component(mask: &BinaryMask) -> BinaryMask {
    mask.largest_component()
}

#[inline]
fn quantize(v: f64) -> u8 {
    // round half up
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Decodes an 8-bit RGB or RGBA PNG. Alpha is discarded.
pub fn decode_png(bytes: &[u8]) -> Result<ImageF> {
    let dynimg = decode_png_dynamic(bytes)?;
    let rgb = match dynimg.color() {
        ColorType::Rgb8 | ColorType::Rgba8 | ColorType::L8 | ColorType::La8 => dynimg.to_rgb8(),
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "only 8-bit PNG is supported, got {other:?}"
            )))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.into_raw().into_iter().map(|v| v as f64 / 255.0).collect();
    ImageF::new(w, h, data)
}

/// Encodes as 8-bit RGB PNG after clamping and round-half-up quantization.
pub fn encode_png(img: &ImageF) -> Vec<u8> {
    let raw: Vec<u8> = img.data.iter().map(|&v| quantize(v)).collect();
    let buf = image::RgbImage::from_raw(img.width as u32, img.height as u32, raw)
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out.into_inner()
}

/// Masks travel as 8-bit grayscale PNG, 255 = true, 0 = false.
pub fn encode_mask_png(mask: &BinaryMask) -> Vec<u8> {
    let raw: Vec<u8> = mask.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
    let buf = image::GrayImage::from_raw(mask.width as u32, mask.height as u32, raw)
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding");
    out.into_inner()
}

/// Reads a mask PNG; any gray value >= 128 is foreground. Color PNGs are
/// reduced to luma first.
pub fn decode_mask_png(bytes: &[u8]) -> Result<BinaryMask> {
    let dynimg = decode_png_dynamic(bytes)?;
    match dynimg.color() {
        ColorType::L8 | ColorType::La8 | ColorType::Rgb8 | ColorType::Rgba8 => {}
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "only 8-bit PNG is supported, got {other:?}"
            )))
        }
    }
    let gray = dynimg.to_luma8();
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    BinaryMask::new(w, h, gray.into_raw().into_iter().map(|v| v >= 128).collect())
}

fn decode_png_dynamic(bytes: &[u8]) -> Result<DynamicImage> {
    image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::MalformedFile(e.to_string()))
}
