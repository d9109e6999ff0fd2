//! Exact squared Euclidean distance transform on an anisotropic grid.
//!
//! Separable lower-envelope-of-parabolas pass per axis (Felzenszwalb &
//! Huttenlocher), with each axis measured in millimetres.

/// Squared distance in mm² from every voxel to the nearest seed. Voxels are
/// `+inf` when there are no seeds at all.
pub(crate) fn squared_edt(dims: [usize; 3], spacing: [f64; 3], seeds: &[bool]) -> Vec<f64> {
    let mut f: Vec<f64> = seeds
        .iter()
        .map(|&s| if s { 0.0 } else { f64::INFINITY })
        .collect();
    let [nx, ny, nz] = dims;
    let strides = [1, nx, nx * ny];
    let max_len = nx.max(ny).max(nz);
    let mut line = vec![0.0; max_len];
    let mut scratch = Envelope::with_capacity(max_len);

    for axis in 0..3 {
        let len = dims[axis];
        if len == 1 {
            continue;
        }
        let stride = strides[axis];
        // the two axes not being transformed
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for j in 0..dims[b] {
            for i in 0..dims[a] {
                let start = i * strides[a] + j * strides[b];
                for (k, slot) in line[..len].iter_mut().enumerate() {
                    *slot = f[start + k * stride];
                }
                scratch.transform(&line[..len], spacing[axis]);
                for k in 0..len {
                    f[start + k * stride] = scratch.out[k];
                }
            }
        }
    }
    f
}

struct Envelope {
    /// parabola apex indices
    v: Vec<usize>,
    /// boundaries between consecutive parabolas, in mm
    z: Vec<f64>,
    out: Vec<f64>,
}

impl Envelope {
    fn with_capacity(n: usize) -> Self {
        Envelope {
            v: Vec::with_capacity(n),
            z: Vec::with_capacity(n + 1),
            out: vec![0.0; n],
        }
    }

    /// `out[p] = min_q f[q] + (s (p - q))^2`.
    fn transform(&mut self, f: &[f64], s: f64) {
        let n = f.len();
        self.v.clear();
        self.z.clear();
        let pos = |q: usize| q as f64 * s;

        for q in (0..n).filter(|&q| f[q].is_finite()) {
            loop {
                let Some(&last) = self.v.last() else {
                    self.v.push(q);
                    self.z.push(f64::NEG_INFINITY);
                    break;
                };
                let (xq, xl) = (pos(q), pos(last));
                let cross = ((f[q] + xq * xq) - (f[last] + xl * xl)) / (2.0 * (xq - xl));
                if cross <= *self.z.last().expect("paired with v") {
                    self.v.pop();
                    self.z.pop();
                } else {
                    self.v.push(q);
                    self.z.push(cross);
                    break;
                }
            }
        }

        if self.v.is_empty() {
            self.out[..n].fill(f64::INFINITY);
            return;
        }
        let mut k = 0;
        for p in 0..n {
            let x = pos(p);
            while k + 1 < self.v.len() && self.z[k + 1] < x {
                k += 1;
            }
            let d = (p as f64 - self.v[k] as f64) * s;
            self.out[p] = f[self.v[k]] + d * d;
        }
    }
}
