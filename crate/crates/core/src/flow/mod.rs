//! Dense 2D flow fields between slices.
//!
//! Flow is in pixels of the slice grid. Estimated flows have forward
//! semantics: pixel `(x, y)` of the first slice corresponds to
//! `(x + u, y + v)` in the second. Intermediate flows returned by
//! [`compose_intermediate_flow`] are consumed by backward warping.

mod horn_schunck;
mod pyramid;

pub use horn_schunck::{estimate_flow, HsParams};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    w: usize,
    h: usize,
    u: Vec<f32>,
    v: Vec<f32>,
}

impl FlowField {
    pub fn new(w: usize, h: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        let n = w.checked_mul(h).filter(|&n| n > 0);
        if n != Some(u.len()) || n != Some(v.len()) {
            return Err(Error::Shape(format!(
                "flow {w}x{h} cannot hold u[{}], v[{}]",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Data("non-finite flow component".into()));
        }
        Ok(FlowField { w, h, u, v })
    }

    pub fn zeros(w: usize, h: usize) -> Self {
        FlowField {
            w,
            h,
            u: vec![0.0; w * h],
            v: vec![0.0; w * h],
        }
    }

    pub fn constant(w: usize, h: usize, u: f32, v: f32) -> Self {
        FlowField {
            w,
            h,
            u: vec![u; w * h],
            v: vec![v; w * h],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.w, self.h)
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn scaled(&self, a: f32) -> FlowField {
        FlowField {
            w: self.w,
            h: self.h,
            u: self.u.iter().map(|x| a * x).collect(),
            v: self.v.iter().map(|x| a * x).collect(),
        }
    }

    pub(crate) fn from_parts_unchecked(w: usize, h: usize, u: Vec<f32>, v: Vec<f32>) -> Self {
        debug_assert!(u.len() == w * h && v.len() == w * h);
        FlowField { w, h, u, v }
    }
}

/// Intermediate flows at time `t` from the bidirectional pair:
///
/// ```text
/// ft0 = -(1 - t) t f01 + t^2 f10
/// ft1 = (1 - t)^2 f01 - (1 - t) t f10
/// ```
pub fn compose_intermediate_flow(
    f01: &FlowField,
    f10: &FlowField,
    t: f64,
) -> Result<(FlowField, FlowField)> {
    if f01.dims() != f10.dims() {
        return Err(Error::Shape(format!(
            "flow pair dims {:?} vs {:?}",
            f01.dims(),
            f10.dims()
        )));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("t must lie in [0, 1], got {t}")));
    }
    let s = 1.0 - t;
    let (a0, b0) = (-s * t, t * t);
    let (a1, b1) = (s * s, -s * t);
    let mix = |x: &[f32], y: &[f32], a: f64, b: f64| -> Vec<f32> {
        x.iter()
            .zip(y)
            .map(|(&p, &q)| (a * f64::from(p) + b * f64::from(q)) as f32)
            .collect()
    };
    let (w, h) = f01.dims();
    let ft0 = FlowField::from_parts_unchecked(
        w,
        h,
        mix(&f01.u, &f10.u, a0, b0),
        mix(&f01.v, &f10.v, a0, b0),
    );
    let ft1 = FlowField::from_parts_unchecked(
        w,
        h,
        mix(&f01.u, &f10.u, a1, b1),
        mix(&f01.v, &f10.v, a1, b1),
    );
    Ok((ft0, ft1))
}

/// Mean and max of per-pixel Euclidean flow magnitude.
pub fn flow_magnitude_stats(f: &FlowField) -> (f64, f64) {
    let (sum, max) =
        f.u.iter()
            .zip(&f.v)
            .map(|(&u, &v)| f64::from(u).hypot(f64::from(v)))
            .fold((0.0, 0.0f64), |(s, m), r| (s + r, m.max(r)));
    (sum / f.u.len() as f64, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_half_way_constant_motion() {
        let f01 = FlowField::constant(3, 2, 2.0, 0.0);
        let f10 = FlowField::constant(3, 2, -2.0, 0.0);
        let (ft0, ft1) = compose_intermediate_flow(&f01, &f10, 0.5).unwrap();
        // -(0.5)(0.5)(2) + (0.25)(-2) = -1 ; (0.25)(2) - (0.25)(-2) = 1
        assert!(ft0.u().iter().all(|&x| x == -1.0));
        assert!(ft1.u().iter().all(|&x| x == 1.0));
        assert!(ft0.v().iter().chain(ft1.v()).all(|&x| x == 0.0));
    }

    #[test]
    fn compose_endpoints() {
        let f01 = FlowField::new(2, 1, vec![1.5, -3.0], vec![0.25, 9.0]).unwrap();
        let f10 = FlowField::new(2, 1, vec![-7.0, 2.0], vec![4.0, -0.5]).unwrap();
        let (a, b) = compose_intermediate_flow(&f01, &f10, 0.0).unwrap();
        assert_eq!(a, FlowField::zeros(2, 1));
        assert_eq!(b, f01);
        let (a, b) = compose_intermediate_flow(&f01, &f10, 1.0).unwrap();
        assert_eq!(a, f10);
        assert_eq!(b, FlowField::zeros(2, 1));
    }

    #[test]
    fn compose_rejects_bad_inputs() {
        let a = FlowField::zeros(2, 2);
        assert!(matches!(
            compose_intermediate_flow(&a, &FlowField::zeros(2, 3), 0.5),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            compose_intermediate_flow(&a, &a, 1.5),
            Err(Error::Parameter(_))
        ));
        assert!(compose_intermediate_flow(&a, &a, f64::NAN).is_err());
    }

    #[test]
    fn magnitude_stats() {
        assert_eq!(flow_magnitude_stats(&FlowField::zeros(4, 4)), (0.0, 0.0));
        assert_eq!(
            flow_magnitude_stats(&FlowField::constant(1, 1, 3.0, 4.0)),
            (5.0, 5.0)
        );
        let (mean, max) = flow_magnitude_stats(&FlowField::constant(5, 3, 1.0, 1.0));
        assert!((mean - 2f64.sqrt()).abs() < 1e-12);
        assert!((max - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn flow_rejects_non_finite_and_bad_lengths() {
        assert!(FlowField::new(1, 1, vec![f32::INFINITY], vec![0.0]).is_err());
        assert!(FlowField::new(2, 1, vec![0.0], vec![0.0, 0.0]).is_err());
    }
}
