//! Coarse-to-fine Horn-Schunck with incremental warping.
//!
//! Both images are jointly rescaled to `[0, 255]` before estimation so that
//! `alpha` means the same thing regardless of the input intensity units.

use super::pyramid::{self, Grid};
use super::FlowField;
use crate::error::{Error, Result};
use crate::volume::Slice2D;
use crate::warp::sample;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HsParams {
    /// Smoothness weight on the `[0, 255]` intensity scale.
    pub alpha: f64,
    /// Jacobi sweeps per pyramid level, shared across that level's warps.
    pub iterations: usize,
    /// Number of pyramid levels, including full resolution.
    pub pyramid_levels: usize,
    pub warps_per_level: usize,
}

impl Default for HsParams {
    fn default() -> Self {
        HsParams {
            alpha: 15.0,
            iterations: 100,
            pyramid_levels: 3,
            warps_per_level: 3,
        }
    }
}

impl HsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Parameter(format!(
                "alpha must be > 0, got {}",
                self.alpha
            )));
        }
        if self.iterations == 0 || self.pyramid_levels == 0 || self.warps_per_level == 0 {
            return Err(Error::Parameter(
                "iterations, pyramid_levels and warps_per_level must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Checks that a `w x h` slice can hold the requested pyramid.
    pub fn validate_for(&self, w: usize, h: usize) -> Result<()> {
        self.validate()?;
        let min = w.min(h);
        let need = 1usize
            .checked_shl(self.pyramid_levels as u32)
            .unwrap_or(usize::MAX);
        if min < need {
            return Err(Error::Parameter(format!(
                "{} pyramid levels need slices of at least {need} px, got {w}x{h}",
                self.pyramid_levels
            )));
        }
        Ok(())
    }

    /// Same parameters with the pyramid shortened to fit a `w x h` slice.
    pub fn fitted_to(&self, w: usize, h: usize) -> HsParams {
        let min = w.min(h).max(1);
        let max_levels = (usize::BITS - 1 - min.leading_zeros()) as usize;
        HsParams {
            pyramid_levels: self.pyramid_levels.min(max_levels).max(1),
            ..*self
        }
    }
}

/// Estimates the forward flow from `i0` to `i1`.
pub fn estimate_flow(i0: &Slice2D, i1: &Slice2D, p: &HsParams) -> Result<FlowField> {
    if i0.dims() != i1.dims() {
        return Err(Error::Shape(format!(
            "slice dims {:?} vs {:?}",
            i0.dims(),
            i1.dims()
        )));
    }
    let (w, h) = i0.dims();
    p.validate_for(w, h)?;

    let (lo0, hi0) = i0.min_max();
    let (lo1, hi1) = i1.min_max();
    let lo = f64::from(lo0.min(lo1));
    let range = f64::from(hi0.max(hi1)) - lo;
    if range <= 0.0 {
        return Ok(FlowField::zeros(w, h));
    }
    let normalize = |s: &Slice2D| Grid {
        w,
        h,
        data: s
            .data()
            .iter()
            .map(|&x| (f64::from(x) - lo) * 255.0 / range)
            .collect(),
    };

    let pyr0 = pyramid::build(normalize(i0), p.pyramid_levels);
    let pyr1 = pyramid::build(normalize(i1), p.pyramid_levels);

    let coarsest = pyr0.last().expect("non-empty pyramid");
    let mut u = Grid::zeros(coarsest.w, coarsest.h);
    let mut v = Grid::zeros(coarsest.w, coarsest.h);

    for (level, (g0, g1)) in pyr0.iter().zip(&pyr1).enumerate().rev() {
        if level + 1 < pyr0.len() {
            u = u.upsample_flow(g0.w, g0.h);
            v = v.upsample_flow(g0.w, g0.h);
        }
        for k in 0..p.warps_per_level {
            let sweeps =
                p.iterations * (k + 1) / p.warps_per_level - p.iterations * k / p.warps_per_level;
            refine(g0, g1, &mut u, &mut v, p.alpha, sweeps.max(1));
        }
    }

    let to_f32 = |g: Grid| g.data.into_iter().map(|x| x as f32).collect();
    FlowField::new(w, h, to_f32(u), to_f32(v))
}

/// One warping stage: linearise `i1` around the current flow and run Jacobi sweeps.
fn refine(i0: &Grid, i1: &Grid, u: &mut Grid, v: &mut Grid, alpha: f64, sweeps: usize) {
    let (w, h) = (i0.w, i0.h);
    let mut warped = Grid::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let i = x + w * y;
            warped.data[i] = sample(&i1.data, w, h, x as f64 + u.data[i], y as f64 + v.data[i]);
        }
    }

    let n = w * h;
    let mut ix = vec![0.0; n];
    let mut iy = vec![0.0; n];
    let mut it = vec![0.0; n];
    for y in 0..h {
        for x in 0..w {
            let i = x + w * y;
            let (xs, ys) = (x as isize, y as isize);
            let dx = |g: &Grid| 0.5 * (g.at_clamped(xs + 1, ys) - g.at_clamped(xs - 1, ys));
            let dy = |g: &Grid| 0.5 * (g.at_clamped(xs, ys + 1) - g.at_clamped(xs, ys - 1));
            ix[i] = 0.5 * (dx(i0) + dx(&warped));
            iy[i] = 0.5 * (dy(i0) + dy(&warped));
            it[i] = warped.data[i] - i0.data[i];
        }
    }

    let alpha2 = alpha * alpha;
    let base_u = u.data.clone();
    let base_v = v.data.clone();
    let mut next_u = Grid::zeros(w, h);
    let mut next_v = Grid::zeros(w, h);
    for _ in 0..sweeps {
        for y in 0..h {
            for x in 0..w {
                let i = x + w * y;
                let ubar = neighbour_mean(u, x, y);
                let vbar = neighbour_mean(v, x, y);
                let r = ix[i] * (ubar - base_u[i]) + iy[i] * (vbar - base_v[i]) + it[i];
                let denom = alpha2 + ix[i] * ix[i] + iy[i] * iy[i];
                next_u.data[i] = ubar - ix[i] * r / denom;
                next_v.data[i] = vbar - iy[i] * r / denom;
            }
        }
        std::mem::swap(u, &mut next_u);
        std::mem::swap(v, &mut next_v);
    }
}

/// Horn-Schunck weighted neighbourhood mean: 1/6 edge neighbours, 1/12 diagonals.
#[inline]
fn neighbour_mean(g: &Grid, x: usize, y: usize) -> f64 {
    let (x, y) = (x as isize, y as isize);
    let edges = g.at_clamped(x - 1, y)
        + g.at_clamped(x + 1, y)
        + g.at_clamped(x, y - 1)
        + g.at_clamped(x, y + 1);
    let diags = g.at_clamped(x - 1, y - 1)
        + g.at_clamped(x + 1, y - 1)
        + g.at_clamped(x - 1, y + 1)
        + g.at_clamped(x + 1, y + 1);
    edges / 6.0 + diags / 12.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(w: usize, h: usize, cx: f64, cy: f64, sigma: f64) -> Slice2D {
        Slice2D::from_fn(w, h, |x, y| {
            let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
            (-d2 / (2.0 * sigma * sigma)).exp() as f32
        })
        .unwrap()
    }

    fn median(mut xs: Vec<f32>) -> f32 {
        xs.sort_by(|a, b| a.total_cmp(b));
        xs[xs.len() / 2]
    }

    #[test]
    fn identical_images_give_zero_flow() {
        let a = blob(32, 32, 14.0, 17.0, 4.0);
        let f = estimate_flow(&a, &a, &HsParams::default()).unwrap();
        assert!(f.u().iter().chain(f.v()).all(|x| x.abs() <= 1e-3));
    }

    #[test]
    fn flat_images_give_zero_flow() {
        let a = Slice2D::filled(16, 16, 0.3).unwrap();
        let b = Slice2D::filled(16, 16, 0.7).unwrap();
        for (x, y) in [(&a, &a), (&a, &b)] {
            let f = estimate_flow(x, y, &HsParams::default()).unwrap();
            assert!(f.u().iter().chain(f.v()).all(|&c| c == 0.0));
        }
    }

    #[test]
    fn recovers_small_translation() {
        let a = blob(64, 64, 30.0, 32.0, 6.0);
        let b = blob(64, 64, 32.0, 32.0, 6.0);
        let f = estimate_flow(&a, &b, &HsParams::default()).unwrap();
        let support: Vec<usize> = (0..a.data().len()).filter(|&i| a.data()[i] > 0.1).collect();
        let mu = median(support.iter().map(|&i| f.u()[i]).collect());
        let mv = median(support.iter().map(|&i| f.v()[i]).collect());
        assert!((mu - 2.0).abs() < 0.5, "median u {mu}");
        assert!(mv.abs() < 0.5, "median v {mv}");
    }

    #[test]
    fn parameter_errors() {
        let a = Slice2D::filled(8, 8, 0.0).unwrap();
        let small = Slice2D::filled(4, 4, 0.0).unwrap();
        assert!(matches!(
            estimate_flow(&a, &small, &HsParams::default()),
            Err(Error::Shape(_))
        ));
        // 3 levels need at least 8 px
        assert!(estimate_flow(&a, &a, &HsParams::default()).is_ok());
        assert!(matches!(
            estimate_flow(&small, &small, &HsParams::default()),
            Err(Error::Parameter(_))
        ));
        let bad = HsParams {
            alpha: 0.0,
            ..HsParams::default()
        };
        assert!(matches!(
            estimate_flow(&a, &a, &bad),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn fitted_params_shrink_pyramid() {
        let p = HsParams::default();
        assert_eq!(p.fitted_to(64, 64).pyramid_levels, 3);
        assert_eq!(p.fitted_to(5, 40).pyramid_levels, 2);
        assert_eq!(p.fitted_to(3, 3).pyramid_levels, 1);
        assert!(p.fitted_to(5, 40).validate_for(5, 40).is_ok());
    }
}
