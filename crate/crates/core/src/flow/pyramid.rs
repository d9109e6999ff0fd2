//! Gaussian image pyramid (5-tap binomial, factor 2) on f64 grids.

use crate::warp::sample;

const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

#[derive(Debug, Clone)]
pub(super) struct Grid {
    pub w: usize,
    pub h: usize,
    pub data: Vec<f64>,
}

impl Grid {
    pub fn zeros(w: usize, h: usize) -> Self {
        Grid {
            w,
            h,
            data: vec![0.0; w * h],
        }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[x + self.w * y]
    }

    /// Pixel value with replicate boundary for signed coordinates.
    #[inline]
    pub fn at_clamped(&self, x: isize, y: isize) -> f64 {
        let xi = x.clamp(0, self.w as isize - 1) as usize;
        let yi = y.clamp(0, self.h as isize - 1) as usize;
        self.at(xi, yi)
    }

    fn blur(&self) -> Grid {
        let mut tmp = Grid::zeros(self.w, self.h);
        for y in 0..self.h {
            for x in 0..self.w {
                tmp.data[x + self.w * y] = BINOMIAL
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * self.at_clamped(x as isize + k as isize - 2, y as isize))
                    .sum();
            }
        }
        let mut out = Grid::zeros(self.w, self.h);
        for y in 0..self.h {
            for x in 0..self.w {
                out.data[x + self.w * y] = BINOMIAL
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * tmp.at_clamped(x as isize, y as isize + k as isize - 2))
                    .sum();
            }
        }
        out
    }

    /// Blur then keep even-indexed pixels. Coarse pixel `i` sits at fine pixel `2i`.
    pub fn downsample(&self) -> Grid {
        let blurred = self.blur();
        let (w, h) = (self.w.div_ceil(2), self.h.div_ceil(2));
        let mut out = Grid::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                out.data[x + w * y] = blurred.at(2 * x, 2 * y);
            }
        }
        out
    }

    /// Resamples a coarse flow component onto a `w x h` grid and doubles it.
    pub fn upsample_flow(&self, w: usize, h: usize) -> Grid {
        let mut out = Grid::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                out.data[x + w * y] =
                    2.0 * sample(&self.data, self.w, self.h, x as f64 / 2.0, y as f64 / 2.0);
            }
        }
        out
    }
}

/// Pyramid with `levels` entries, finest first.
pub(super) fn build(base: Grid, levels: usize) -> Vec<Grid> {
    let mut out = vec![base];
    while out.len() < levels {
        let next = out.last().expect("non-empty").downsample();
        out.push(next);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blur_preserves_constants_and_mean_of_ramp() {
        let g = Grid {
            w: 7,
            h: 5,
            data: vec![3.25; 35],
        };
        assert!(g.blur().data.iter().all(|&v| (v - 3.25).abs() < 1e-12));
        let ramp = Grid {
            w: 9,
            h: 1,
            data: (0..9).map(f64::from).collect(),
        };
        // symmetric kernel leaves interior of a linear ramp untouched
        let b = ramp.blur();
        for x in 2..7 {
            assert!((b.at(x, 0) - x as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn downsample_dims_round_up() {
        let g = Grid::zeros(9, 8);
        let d = g.downsample();
        assert_eq!((d.w, d.h), (5, 4));
        let p = build(Grid::zeros(64, 64), 3);
        assert_eq!(p.iter().map(|g| g.w).collect::<Vec<_>>(), vec![64, 32, 16]);
    }

    #[test]
    fn upsampled_constant_flow_doubles() {
        let g = Grid {
            w: 4,
            h: 4,
            data: vec![1.5; 16],
        };
        let up = g.upsample_flow(8, 8);
        assert!(up.data.iter().all(|&v| v == 3.0));
    }
}
