//! Backward bilinear warping with clamp-to-edge boundaries.

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::volume::Slice2D;

/// Bilinear sample of a `w x h` row-major grid at `(x, y)`. Coordinates are
/// clamped into the grid first, so samples never leave the range of the
/// four contributing pixels.
#[inline]
pub(crate) fn sample<T: Copy + Into<f64>>(data: &[T], w: usize, h: usize, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (w - 1) as f64);
    let y = y.clamp(0.0, (h - 1) as f64);
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (x0, y0) = (x0 as usize, y0 as usize);
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let at = |xi: usize, yi: usize| -> f64 { data[xi + w * yi].into() };

    let row = |yi: usize| -> (f64, f64, f64) {
        let a = at(x0, yi);
        if fx == 0.0 {
            return (a, a, a);
        }
        let b = at(x1, yi);
        (lerp(a, b, fx), a.min(b), a.max(b))
    };

    let (top, lo0, hi0) = row(y0);
    if fy == 0.0 {
        return top;
    }
    let (bottom, lo1, hi1) = row(y1);
    lerp(top, bottom, fy).clamp(lo0.min(lo1), hi0.max(hi1))
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    let v = (1.0 - t) * a + t * b;
    v.clamp(a.min(b), a.max(b))
}

/// `g(img, flow)`: output pixel `(x, y)` samples `img` at `(x + u, y + v)`.
pub fn backward_warp(img: &Slice2D, flow: &FlowField) -> Result<Slice2D> {
    if img.dims() != flow.dims() {
        return Err(Error::Shape(format!(
            "image {:?} vs flow {:?}",
            img.dims(),
            flow.dims()
        )));
    }
    let (w, h) = img.dims();
    Ok(Slice2D::from_parts_unchecked(
        w,
        h,
        warp_values(img.data(), w, h, flow.u(), flow.v()),
    ))
}

pub(crate) fn warp_values<T: Copy + Into<f64>>(
    data: &[T],
    w: usize,
    h: usize,
    u: &[f32],
    v: &[f32],
) -> Vec<f32> {
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = x + w * y;
            let s = sample(
                data,
                w,
                h,
                x as f64 + f64::from(u[i]),
                y as f64 + f64::from(v[i]),
            );
            out.push(s as f32);
        }
    }
    out
}
