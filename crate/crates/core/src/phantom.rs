//! Synthetic ground-truth volumes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, Spacing, Volume};

const BACKGROUND: f64 = 0.1;
const FOREGROUND: f64 = 0.8;
const TEXTURE: f64 = 0.1;
/// Logistic edge width in pixels.
const EDGE: f64 = 0.6;

/// A textured disk whose centre moves along a straight line as z increases.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingDisk {
    pub dims: [usize; 3],
    pub spacing: Spacing,
    pub radius: f64,
    /// In-plane displacement per axial slice, in pixels.
    pub shift_per_slice: f64,
    pub seed: u64,
}

impl MovingDisk {
    /// Defaults for a given grid: unit spacing, radius `min(X, Y) / 8`, 0.75 px per slice.
    pub fn new(dims: [usize; 3], seed: u64) -> Self {
        MovingDisk {
            dims,
            spacing: Spacing::isotropic(1.0).expect("unit spacing"),
            radius: dims[0].min(dims[1]) as f64 / 8.0,
            shift_per_slice: 0.75,
            seed,
        }
    }

    /// Start centre and unit direction drawn from the seed so the whole path stays inside the slice.
    pub fn path(&self) -> Result<Path> {
        let [nx, ny, nz] = self.dims;
        if nx < 16 || ny < 16 || nz < 16 {
            return Err(Error::Parameter(format!(
                "phantom needs at least 16 voxels per axis, got {:?}",
                self.dims
            )));
        }
        if !(self.radius > 0.0 && self.shift_per_slice >= 0.0) {
            return Err(Error::Parameter("radius must be > 0 and shift >= 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        let dir = [angle.cos(), angle.sin()];
        let travel = self.shift_per_slice * (nz - 1) as f64;
        let margin = self.radius + 2.0;
        let mut start = [0.0; 2];
        for (axis, extent) in [nx, ny].into_iter().enumerate() {
            let d = dir[axis] * travel;
            let lo = margin - d.min(0.0);
            let hi = (extent - 1) as f64 - margin - d.max(0.0);
            if lo > hi {
                return Err(Error::Parameter(format!(
                    "disk of radius {} travelling {travel:.1} px does not fit in {:?}",
                    self.radius, self.dims
                )));
            }
            start[axis] = rng.random_range(lo..=hi);
        }
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        Ok(Path {
            start,
            dir,
            step: self.shift_per_slice,
            phase,
        })
    }

    pub fn generate(&self) -> Result<(Volume, LabelVolume, Path)> {
        let path = self.path()?;
        let [nx, ny, nz] = self.dims;
        let mut data = Vec::with_capacity(nx * ny * nz);
        let mut labels = Vec::with_capacity(nx * ny * nz);
        let r2 = self.radius * self.radius;
        for z in 0..nz {
            let [cx, cy] = path.center(z);
            for y in 0..ny {
                for x in 0..nx {
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    let d2 = dx * dx + dy * dy;
                    let inside = 1.0 / (1.0 + ((d2.sqrt() - self.radius) / EDGE).exp());
                    let texture = TEXTURE * (dx / 2.5 + path.phase).sin() * (dy / 3.0).cos();
                    data.push((BACKGROUND + inside * (FOREGROUND + texture)) as f32);
                    labels.push(u16::from(d2 <= r2));
                }
            }
        }
        Ok((
            Volume::new(self.dims, self.spacing, data)?,
            LabelVolume::new(self.dims, self.spacing, 2, labels)?,
            path,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Path {
    pub start: [f64; 2],
    pub dir: [f64; 2],
    pub step: f64,
    phase: f64,
}

impl Path {
    pub fn center(&self, z: usize) -> [f64; 2] {
        let s = self.step * z as f64;
        [
            self.start[0] + s * self.dir[0],
            self.start[1] + s * self.dir[1],
        ]
    }
}
