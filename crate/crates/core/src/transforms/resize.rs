use crate::error::{Error, Result};
use crate::image::ImageF;

/// Bilinear resampling with half-pixel-centre alignment and edge clamping.
pub fn resize_bilinear(img: &ImageF, new_w: usize, new_h: usize) -> Result<ImageF> {
    if new_w == 0 || new_h == 0 {
        return Err(Error::invalid("resize target must be at least 1x1"));
    }
    let (w, h) = img.dims();
    if (w, h) == (new_w, new_h) {
        return Ok(img.clone());
    }
    let sx = w as f64 / new_w as f64;
    let sy = h as f64 / new_h as f64;
    let sample = |pos: f64, n: usize| -> (usize, usize, f64) {
        let p = pos.clamp(0.0, (n - 1) as f64);
        let i0 = p.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, p - i0 as f64)
    };
    Ok(ImageF::from_fn(new_w, new_h, |x, y| {
        let (x0, x1, fx) = sample((x as f64 + 0.5) * sx - 0.5, w);
        let (y0, y1, fy) = sample((y as f64 + 0.5) * sy - 0.5, h);
        let (p00, p10, p01, p11) = (img.pixel(x0, y0), img.pixel(x1, y0), img.pixel(x0, y1), img.pixel(x1, y1));
        let mut out = [0.0; 3];
        for c in 0..3 {
            let top = p00[c] + (p10[c] - p00[c]) * fx;
            let bot = p01[c] + (p11[c] - p01[c]) * fx;
            out[c] = top + (bot - top) * fy;
        }
        out
    }))
}
