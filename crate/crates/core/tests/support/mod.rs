//! Independent reference implementations used as test oracles.
//!
//! Everything here is written from the definitions with plain loops and does
//! not call into the library's algorithms (only its data types).

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slicefill::flow::FlowField;
use slicefill::volume::{LabelVolume, Slice2D, Spacing, Volume};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random labels over `classes` with roughly `fill` of the voxels non-background,
/// grown from a few seeds so the masks have real surfaces and interiors.
pub fn random_labels(
    rng: &mut ChaCha8Rng,
    dims: [usize; 3],
    classes: u16,
    spacing: Spacing,
) -> LabelVolume {
    let n = dims.iter().product();
    let mut data = vec![0u16; n];
    for c in 1..classes {
        let blobs = rng.random_range(0..4);
        for _ in 0..blobs {
            let centre = [
                rng.random_range(0..dims[0]) as f64,
                rng.random_range(0..dims[1]) as f64,
                rng.random_range(0..dims[2]) as f64,
            ];
            let r = rng.random_range(0.8..3.5);
            for z in 0..dims[2] {
                for y in 0..dims[1] {
                    for x in 0..dims[0] {
                        let d2 = (x as f64 - centre[0]).powi(2)
                            + (y as f64 - centre[1]).powi(2)
                            + (z as f64 - centre[2]).powi(2);
                        if d2 <= r * r {
                            data[x + dims[0] * (y + dims[1] * z)] = c;
                        }
                    }
                }
            }
        }
        // sprinkle isolated voxels
        for _ in 0..rng.random_range(0..6) {
            data[rng.random_range(0..n)] = c;
        }
    }
    LabelVolume::new(dims, spacing, u32::from(classes), data).unwrap()
}

pub fn random_spacing(rng: &mut ChaCha8Rng) -> Spacing {
    Spacing::new(
        rng.random_range(0.3..2.0),
        rng.random_range(0.3..2.0),
        rng.random_range(0.5..5.0),
    )
    .unwrap()
}

pub fn random_slice(rng: &mut ChaCha8Rng, w: usize, h: usize, lo: f32, hi: f32) -> Slice2D {
    Slice2D::new(w, h, (0..w * h).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn random_flow(rng: &mut ChaCha8Rng, w: usize, h: usize, mag: f32) -> FlowField {
    let mut c = || {
        (0..w * h)
            .map(|_| rng.random_range(-mag..mag))
            .collect::<Vec<f32>>()
    };
    let u = c();
    let v = c();
    FlowField::new(w, h, u, v).unwrap()
}

pub fn random_volume(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> Volume {
    let n = dims.iter().product();
    let spacing = random_spacing(rng);
    Volume::new(
        dims,
        spacing,
        (0..n)
            .map(|_| rng.random_range(-1000.0f32..1000.0))
            .collect(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// segmentation metrics

pub struct BruteMetrics {
    pub gt_count: usize,
    pub pred_count: usize,
    pub intersection: usize,
    pub gt_surface: Vec<[usize; 3]>,
    pub pred_surface: Vec<[usize; 3]>,
}

fn brute_surface(l: &LabelVolume, c: u16) -> Vec<[usize; 3]> {
    let [nx, ny, nz] = l.dims();
    let fg = |x: i64, y: i64, z: i64| -> bool {
        if x < 0 || y < 0 || z < 0 || x >= nx as i64 || y >= ny as i64 || z >= nz as i64 {
            return false;
        }
        l.get(x as usize, y as usize, z as usize) == c
    };
    let mut out = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let (xi, yi, zi) = (x as i64, y as i64, z as i64);
                if !fg(xi, yi, zi) {
                    continue;
                }
                let neighbours = [
                    (xi - 1, yi, zi),
                    (xi + 1, yi, zi),
                    (xi, yi - 1, zi),
                    (xi, yi + 1, zi),
                    (xi, yi, zi - 1),
                    (xi, yi, zi + 1),
                ];
                if neighbours.iter().any(|&(a, b, c)| !fg(a, b, c)) {
                    out.push([x, y, z]);
                }
            }
        }
    }
    out
}

pub fn brute(gt: &LabelVolume, pred: &LabelVolume, c: u16) -> BruteMetrics {
    let mut m = BruteMetrics {
        gt_count: 0,
        pred_count: 0,
        intersection: 0,
        gt_surface: brute_surface(gt, c),
        pred_surface: brute_surface(pred, c),
    };
    for (&g, &p) in gt.data().iter().zip(pred.data()) {
        m.gt_count += usize::from(g == c);
        m.pred_count += usize::from(p == c);
        m.intersection += usize::from(g == c && p == c);
    }
    m
}

impl BruteMetrics {
    pub fn dice(&self) -> f64 {
        if self.gt_count + self.pred_count == 0 {
            100.0
        } else {
            2.0 * self.intersection as f64 / (self.gt_count + self.pred_count) as f64 * 100.0
        }
    }

    pub fn ravd(&self) -> Option<f64> {
        (self.gt_count > 0)
            .then(|| (self.pred_count as f64 - self.gt_count as f64) / self.gt_count as f64 * 100.0)
    }

    fn directed(from: &[[usize; 3]], to: &[[usize; 3]], s: Spacing) -> Vec<f64> {
        from.iter()
            .map(|a| {
                to.iter()
                    .map(|b| {
                        let dx = (a[0] as f64 - b[0] as f64) * s.sx;
                        let dy = (a[1] as f64 - b[1] as f64) * s.sy;
                        let dz = (a[2] as f64 - b[2] as f64) * s.sz;
                        (dx * dx + dy * dy + dz * dz).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    }

    /// (assd, mssd), or None when either surface is empty.
    pub fn surface_distances(&self, s: Spacing) -> Option<(f64, f64)> {
        if self.gt_surface.is_empty() || self.pred_surface.is_empty() {
            return None;
        }
        let a = Self::directed(&self.gt_surface, &self.pred_surface, s);
        let b = Self::directed(&self.pred_surface, &self.gt_surface, s);
        let total: f64 = a.iter().chain(&b).sum();
        let assd = total / (a.len() + b.len()) as f64;
        let mssd = a.iter().chain(&b).fold(0.0f64, |m, &d| m.max(d));
        Some((assd, mssd))
    }
}

// ---------------------------------------------------------------------------
// warping and losses

/// Bilinear lookup with coordinates clamped to the grid, from the textbook formula.
pub fn naive_sample(img: &Slice2D, x: f64, y: f64) -> f64 {
    let (w, h) = img.dims();
    let x = x.max(0.0).min((w - 1) as f64);
    let y = y.max(0.0).min((h - 1) as f64);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = if x0 + 1 < w { x0 + 1 } else { x0 };
    let y1 = if y0 + 1 < h { y0 + 1 } else { y0 };
    let (a, b) = (x - x0 as f64, y - y0 as f64);
    let p = |xx: usize, yy: usize| f64::from(img.get(xx, yy));
    p(x0, y0) * (1.0 - a) * (1.0 - b)
        + p(x1, y0) * a * (1.0 - b)
        + p(x0, y1) * (1.0 - a) * b
        + p(x1, y1) * a * b
}

pub fn naive_warp(img: &Slice2D, f: &FlowField) -> Vec<f64> {
    let (w, h) = img.dims();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            out.push(naive_sample(
                img,
                x as f64 + f64::from(f.u()[i]),
                y as f64 + f64::from(f.v()[i]),
            ));
        }
    }
    out
}

pub fn naive_l1(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).abs();
    }
    s / a.len() as f64
}

pub fn as_f64(s: &Slice2D) -> Vec<f64> {
    s.data().iter().map(|&x| f64::from(x)).collect()
}

pub fn naive_rec(pairs: &[(Slice2D, Slice2D)]) -> f64 {
    let mut s = 0.0;
    for (a, b) in pairs {
        s += naive_l1(&as_f64(a), &as_f64(b));
    }
    s / pairs.len() as f64
}

/// Mean |forward difference| per component and axis, summed.
pub fn naive_grad_l1(f: &FlowField) -> f64 {
    let (w, h) = f.dims();
    let mut total = 0.0;
    for comp in [f.u(), f.v()] {
        let (mut sx, mut nx) = (0.0, 0);
        let (mut sy, mut ny) = (0.0, 0);
        for y in 0..h {
            for x in 0..w {
                if x + 1 < w {
                    sx += (f64::from(comp[y * w + x + 1]) - f64::from(comp[y * w + x])).abs();
                    nx += 1;
                }
                if y + 1 < h {
                    sy += (f64::from(comp[(y + 1) * w + x]) - f64::from(comp[y * w + x])).abs();
                    ny += 1;
                }
            }
        }
        if nx > 0 {
            total += sx / nx as f64;
        }
        if ny > 0 {
            total += sy / ny as f64;
        }
    }
    total
}

/// Through-plane roughness straight from the voxel grid.
pub fn naive_tp_smooth(v: &Volume) -> f64 {
    let [nx, ny, nz] = v.dims();
    let at = |x: usize, y: usize, z: usize| f64::from(v.get(x, y, z));
    let mut total = 0.0;
    // sagittal slices: fixed x, grid (y, z)
    for x in 0..nx {
        let mut s = 0.0;
        for z in 0..nz {
            for y in 0..ny {
                if y > 0 {
                    s += (at(x, y - 1, z) - at(x, y, z)).powi(2);
                }
                if z + 1 < nz {
                    s += (at(x, y, z + 1) - at(x, y, z)).powi(2);
                }
            }
        }
        total += s / (ny * nz) as f64;
    }
    // coronal slices: fixed y, grid (x, z)
    for y in 0..ny {
        let mut s = 0.0;
        for z in 0..nz {
            for x in 0..nx {
                if x > 0 {
                    s += (at(x - 1, y, z) - at(x, y, z)).powi(2);
                }
                if z + 1 < nz {
                    s += (at(x, y, z + 1) - at(x, y, z)).powi(2);
                }
            }
        }
        total += s / (nx * nz) as f64;
    }
    total / (nx + ny) as f64
}

pub fn naive_mean_log(p: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in p {
        s += x.ln();
    }
    s / p.len() as f64
}

pub fn naive_mean_log1m(p: &[f64]) -> f64 {
    let mut s = 0.0;
    for &x in p {
        s += (1.0 - x).ln();
    }
    s / p.len() as f64
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}
