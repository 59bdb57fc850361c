use crate::image::GrayF;

use super::blur::reflect_index;

/// One-level orthonormal Haar decomposition.
///
/// `lh` holds horizontal detail, `hl` vertical detail, `hh` diagonal detail.
/// Odd inputs are reflect-padded to even size; `width`/`height` remember the
/// original size so the inverse can crop.
#[derive(Debug, Clone, PartialEq)]
pub struct DwtPyramid {
    pub ll: GrayF,
    pub lh: GrayF,
    pub hl: GrayF,
    pub hh: GrayF,
    pub width: usize,
    pub height: usize,
}

pub fn haar_dwt2(plane: &GrayF) -> DwtPyramid {
    let (w, h) = plane.dims();
    let (hw, hh) = (w.div_ceil(2), h.div_ceil(2));
    let px = |x: usize, y: usize| plane.get(reflect_index(x as isize, w), reflect_index(y as isize, h));
    let mut ll = GrayF::zeros(hw, hh);
    let mut lh = GrayF::zeros(hw, hh);
    let mut hl = GrayF::zeros(hw, hh);
    let mut d = GrayF::zeros(hw, hh);
    for j in 0..hh {
        for i in 0..hw {
            let a = px(2 * i, 2 * j);
            let b = px(2 * i + 1, 2 * j);
            let c = px(2 * i, 2 * j + 1);
            let e = px(2 * i + 1, 2 * j + 1);
            ll.set(i, j, (a + b + c + e) / 2.0);
            lh.set(i, j, (a - b + c - e) / 2.0);
            hl.set(i, j, (a + b - c - e) / 2.0);
            d.set(i, j, (a - b - c + e) / 2.0);
        }
    }
    DwtPyramid {
        ll,
        lh,
        hl,
        hh: d,
        width: w,
        height: h,
    }
}

pub fn haar_idwt2(p: &DwtPyramid) -> GrayF {
    let (w, h) = (p.width, p.height);
    let mut out = GrayF::zeros(w, h);
    for j in 0..p.ll.height() {
        for i in 0..p.ll.width() {
            let (s, dx, dy, dd) = (p.ll.get(i, j), p.lh.get(i, j), p.hl.get(i, j), p.hh.get(i, j));
            let vals = [
                (2 * i, 2 * j, (s + dx + dy + dd) / 2.0),
                (2 * i + 1, 2 * j, (s - dx + dy - dd) / 2.0),
                (2 * i, 2 * j + 1, (s + dx - dy - dd) / 2.0),
                (2 * i + 1, 2 * j + 1, (s - dx - dy + dd) / 2.0),
            ];
            for (x, y, v) in vals {
                if x < w && y < h {
                    out.set(x, y, v);
                }
            }
        }
    }
    out
}
