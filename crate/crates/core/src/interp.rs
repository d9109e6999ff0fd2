//! Intermediate slice and label synthesis, and anisotropic-to-isotropic imputation.
//!
//! Between every pair of consecutive axial slices `(k, k + 1)` we insert `N`
//! synthetic slices at `t = n / (N + 1)`. Each one blends the two endpoint
//! slices after backward-warping them with the intermediate flows composed
//! from the bidirectional pair. Original slices are copied through untouched.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{compose_intermediate_flow, estimate_flow, FlowField, HsParams};
use crate::volume::{LabelVolume, Slice2D, Volume};
use crate::warp::{backward_warp, warp_values};

/// Class-id slice, row-major like [`Slice2D`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSlice {
    w: usize,
    h: usize,
    classes: u32,
    data: Vec<u16>,
}

impl LabelSlice {
    pub fn new(w: usize, h: usize, classes: u32, data: Vec<u16>) -> Result<Self> {
        if w == 0 || h == 0 || w.checked_mul(h) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "label slice {w}x{h} cannot hold {} pixels",
                data.len()
            )));
        }
        if let Some(&c) = data.iter().find(|&&c| u32::from(c) >= classes) {
            return Err(Error::Data(format!("class id {c} outside 0..{classes}")));
        }
        Ok(LabelSlice {
            w,
            h,
            classes,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.w, self.h)
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    /// Indicator map of one class.
    pub fn one_hot(&self, class_id: u16) -> Vec<f32> {
        self.data
            .iter()
            .map(|&c| if c == class_id { 1.0 } else { 0.0 })
            .collect()
    }
}

fn check_same_dims(what: &str, a: (usize, usize), b: (usize, usize)) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("{what}: {a:?} vs {b:?}")));
    }
    Ok(())
}

fn check_t(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("t must lie in [0, 1], got {t}")));
    }
    Ok(())
}

#[inline]
fn blend(a: f64, b: f64, t: f64) -> f64 {
    ((1.0 - t) * a + t * b).clamp(a.min(b), a.max(b))
}

/// `(1 - t) g(i0, ft0) + t g(i1, ft1)`.
pub fn synth_intermediate_slice(
    i0: &Slice2D,
    i1: &Slice2D,
    ft0: &FlowField,
    ft1: &FlowField,
    t: f64,
) -> Result<Slice2D> {
    check_same_dims("slice pair", i0.dims(), i1.dims())?;
    check_t(t)?;
    let a = backward_warp(i0, ft0)?;
    let b = backward_warp(i1, ft1)?;
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| blend(f64::from(p), f64::from(q), t) as f32)
        .collect();
    let (w, h) = i0.dims();
    Ok(Slice2D::from_parts_unchecked(w, h, data))
}

/// Warps and blends every class indicator map like an image, then takes the
/// per-pixel argmax. Ties go to the lower class id, so background wins them.
pub fn synth_intermediate_label(
    l0: &LabelSlice,
    l1: &LabelSlice,
    ft0: &FlowField,
    ft1: &FlowField,
    t: f64,
) -> Result<LabelSlice> {
    check_same_dims("label pair", l0.dims(), l1.dims())?;
    check_same_dims("label/flow", l0.dims(), ft0.dims())?;
    check_same_dims("label/flow", l0.dims(), ft1.dims())?;
    if l0.classes != l1.classes {
        return Err(Error::Shape(format!(
            "class counts {} vs {}",
            l0.classes, l1.classes
        )));
    }
    check_t(t)?;
    let (w, h) = l0.dims();
    let mut best = vec![f64::NEG_INFINITY; w * h];
    let mut out = vec![0u16; w * h];
    for c in 0..l0.classes {
        let c = c as u16;
        let a = warp_values(&l0.one_hot(c), w, h, ft0.u(), ft0.v());
        let b = warp_values(&l1.one_hot(c), w, h, ft1.u(), ft1.v());
        for (i, (&p, &q)) in a.iter().zip(&b).enumerate() {
            let score = blend(f64::from(p), f64::from(q), t);
            if score > best[i] {
                best[i] = score;
                out[i] = c;
            }
        }
    }
    Ok(LabelSlice {
        w,
        h,
        classes: l0.classes,
        data: out,
    })
}

/// Slices to insert per gap so the through-plane spacing drops to the in-plane
/// spacing: `floor(d_inter / d_intra) - 1`, never below zero.
pub fn compute_na(d_inter: f64, d_intra: f64) -> Result<usize> {
    for (name, d) in [("d_inter", d_inter), ("d_intra", d_intra)] {
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::Parameter(format!(
                "{name} must be positive, got {d}"
            )));
        }
    }
    // tolerate ratios like 0.3 / 0.1 = 2.9999999999999996
    let ratio = d_inter / d_intra;
    let steps = (ratio + ratio * 1e-12).floor();
    Ok((steps - 1.0).max(0.0) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SliceCount {
    Fixed(usize),
    /// `compute_na(sz, sx)`.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Flow,
    /// Zero flows: a plain per-pixel blend of the bracketing slices.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelRule {
    #[default]
    ArgmaxOneHot,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputeConfig {
    pub n_slices: SliceCount,
    pub method: Method,
    pub label_rule: LabelRule,
    pub hs: HsParams,
}

impl Default for ImputeConfig {
    fn default() -> Self {
        ImputeConfig {
            n_slices: SliceCount::Auto,
            method: Method::Flow,
            label_rule: LabelRule::ArgmaxOneHot,
            hs: HsParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Imputed {
    pub volume: Volume,
    pub labels: Option<LabelVolume>,
    pub n_per_gap: usize,
    pub warnings: Vec<String>,
}

/// Synthetic slices for one gap, in order of increasing `t`.
struct GapFill {
    slices: Vec<Slice2D>,
    labels: Vec<LabelSlice>,
}

pub fn impute_volume(
    v: &Volume,
    labels: Option<&LabelVolume>,
    cfg: &ImputeConfig,
) -> Result<Imputed> {
    let [nx, ny, nz] = v.dims();
    if nz < 2 {
        return Err(Error::InsufficientSlices(nz));
    }
    if let Some(l) = labels {
        if l.dims() != v.dims() || l.spacing() != v.spacing() {
            return Err(Error::Shape(format!(
                "labels {:?} @ {:?} do not match volume {:?} @ {:?}",
                l.dims(),
                l.spacing(),
                v.dims(),
                v.spacing()
            )));
        }
    }

    let spacing = v.spacing();
    let mut warnings = Vec::new();
    let n = match cfg.n_slices {
        SliceCount::Fixed(n) => n,
        SliceCount::Auto => {
            if spacing.sz <= spacing.sx {
                warnings.push(format!(
                    "through-plane spacing {} <= in-plane spacing {}; nothing to impute",
                    spacing.sz, spacing.sx
                ));
            }
            compute_na(spacing.sz, spacing.sx)?
        }
    };
    if n == 0 {
        return Ok(Imputed {
            volume: v.clone(),
            labels: labels.cloned(),
            n_per_gap: 0,
            warnings,
        });
    }

    let hs = cfg.hs.fitted_to(nx, ny);
    if cfg.method == Method::Flow {
        hs.validate_for(nx, ny)?;
    }

    let axial = |z: usize| Slice2D::from_parts_unchecked(nx, ny, v.axial(z).to_vec());
    let axial_labels = |l: &LabelVolume, z: usize| LabelSlice {
        w: nx,
        h: ny,
        classes: l.classes(),
        data: l.axial(z).to_vec(),
    };

    let gaps: Vec<GapFill> = (0..nz - 1)
        .into_par_iter()
        .map(|k| -> Result<GapFill> {
            let (i0, i1) = (axial(k), axial(k + 1));
            let (f01, f10) = match cfg.method {
                Method::Flow => (estimate_flow(&i0, &i1, &hs)?, estimate_flow(&i1, &i0, &hs)?),
                Method::Linear => (FlowField::zeros(nx, ny), FlowField::zeros(nx, ny)),
            };
            let pair = labels.map(|l| (axial_labels(l, k), axial_labels(l, k + 1)));
            let mut fill = GapFill {
                slices: Vec::with_capacity(n),
                labels: Vec::with_capacity(if pair.is_some() { n } else { 0 }),
            };
            for step in 1..=n {
                let t = step as f64 / (n + 1) as f64;
                let (ft0, ft1) = compose_intermediate_flow(&f01, &f10, t)?;
                fill.slices
                    .push(synth_intermediate_slice(&i0, &i1, &ft0, &ft1, t)?);
                if let Some((l0, l1)) = &pair {
                    fill.labels
                        .push(synth_intermediate_label(l0, l1, &ft0, &ft1, t)?);
                }
            }
            Ok(fill)
        })
        .collect::<Result<_>>()?;

    let z_out = nz + (nz - 1) * n;
    let plane = nx * ny;
    let mut data = Vec::with_capacity(plane * z_out);
    let mut label_data = labels.map(|_| Vec::with_capacity(plane * z_out));
    for z in 0..nz {
        data.extend_from_slice(v.axial(z));
        if let (Some(out), Some(l)) = (label_data.as_mut(), labels) {
            out.extend_from_slice(l.axial(z));
        }
        if let Some(gap) = gaps.get(z) {
            for s in &gap.slices {
                data.extend_from_slice(s.data());
            }
            if let Some(out) = label_data.as_mut() {
                for s in &gap.labels {
                    out.extend_from_slice(s.data());
                }
            }
        }
    }

    let out_spacing = spacing.with_sz(spacing.sz / (n + 1) as f64)?;
    let dims = [nx, ny, z_out];
    let labels = match (labels, label_data) {
        (Some(l), Some(d)) => Some(LabelVolume::from_parts_unchecked(
            dims,
            out_spacing,
            l.classes(),
            l.dtype(),
            d,
        )),
        _ => None,
    };
    Ok(Imputed {
        volume: Volume::from_parts_unchecked(dims, out_spacing, data),
        labels,
        n_per_gap: n,
        warnings,
    })
}
