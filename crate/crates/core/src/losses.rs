//! Closed-form evaluators for the synthesis loss terms.
//!
//! L1 norms are per-pixel means. Logarithms are natural. The perceptual term
//! has no built-in feature extractor; callers pass it in as a scalar.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::volume::{Axis, Slice2D, Volume};
use crate::warp::backward_warp;

/// Discriminator or classifier outputs, each strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbSeries {
    name: &'static str,
    values: Vec<f64>,
}

impl ProbSeries {
    /// `name` appears in domain errors to identify the offending series.
    pub fn new(name: &'static str, values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &p)| !(p > 0.0 && p < 1.0))
        {
            return Err(Error::Domain {
                series: name,
                index,
                value,
            });
        }
        Ok(ProbSeries { name, values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinarySeries(Vec<u8>);

impl BinarySeries {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if let Some(i) = values.iter().position(|&y| y > 1) {
            return Err(Error::Parameter(format!(
                "binary series entry {i} is {}, expected 0 or 1",
                values[i]
            )));
        }
        Ok(BinarySeries(values))
    }

    pub fn values(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LossWeights {
    pub lambda_rec: f64,
    pub lambda_per: f64,
    pub lambda_warp: f64,
    pub lambda_smooth: f64,
    pub lambda_adv: f64,
    pub lambda_tp_smooth: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_rec: 1.0,
            lambda_per: 0.0,
            lambda_warp: 1.0,
            lambda_smooth: 1.0,
            lambda_adv: 0.050,
            lambda_tp_smooth: 0.467,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (name, w) in self.named() {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and >= 0, got {w}"
                )));
            }
        }
        Ok(())
    }

    /// Parses a partial weights object; omitted keys keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let w: LossWeights = serde_json::from_str(text)
            .map_err(|e| Error::Format(format!("bad weights JSON: {e}")))?;
        w.validate()?;
        Ok(w)
    }

    fn named(&self) -> [(&'static str, f64); 6] {
        [
            ("lambda_rec", self.lambda_rec),
            ("lambda_per", self.lambda_per),
            ("lambda_warp", self.lambda_warp),
            ("lambda_smooth", self.lambda_smooth),
            ("lambda_adv", self.lambda_adv),
            ("lambda_tp_smooth", self.lambda_tp_smooth),
        ]
    }
}

/// Values of the six weighted terms. Absent terms are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub rec: f64,
    pub per: f64,
    pub warp: f64,
    pub smooth: f64,
    pub adv: f64,
    pub tp_smooth: f64,
}

fn mean_abs_diff(a: &Slice2D, b: &Slice2D) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| (f64::from(x) - f64::from(y)).abs())
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Mean over pairs of the per-pixel mean absolute difference.
pub fn rec_loss(pairs: &[(Slice2D, Slice2D)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Parameter("rec_loss needs at least one pair".into()));
    }
    let total = pairs
        .iter()
        .map(|(a, b)| mean_abs_diff(a, b))
        .sum::<Result<f64>>()?;
    Ok(total / pairs.len() as f64)
}

/// One ground-truth intermediate slice with its flows from each endpoint.
#[derive(Debug, Clone)]
pub struct WarpTarget {
    pub slice: Slice2D,
    pub from_start: FlowField,
    pub from_end: FlowField,
}

/// ```text
/// |i0 - g(iN1, f10)| + |iN1 - g(i0, f01)|
///   + mean_n |I_n - g(i0, F_0n)| + mean_n |I_n - g(iN1, F_1n)|
/// ```
/// The flows are applied exactly as passed; no mids contributes zero to the last two terms.
pub fn warp_loss(
    i0: &Slice2D,
    i_end: &Slice2D,
    f01: &FlowField,
    f10: &FlowField,
    mids: &[WarpTarget],
) -> Result<f64> {
    let mut loss = mean_abs_diff(i0, &backward_warp(i_end, f10)?)?
        + mean_abs_diff(i_end, &backward_warp(i0, f01)?)?;
    if !mids.is_empty() {
        let mut from_start = 0.0;
        let mut from_end = 0.0;
        for m in mids {
            from_start += mean_abs_diff(&m.slice, &backward_warp(i0, &m.from_start)?)?;
            from_end += mean_abs_diff(&m.slice, &backward_warp(i_end, &m.from_end)?)?;
        }
        loss += (from_start + from_end) / mids.len() as f64;
    }
    Ok(loss)
}

/// Mean |forward difference| of one component along one axis; zero when the axis has no pairs.
fn mean_forward_diff(data: &[f32], w: usize, h: usize, along_x: bool) -> f64 {
    let (pairs, sum) = if along_x {
        let n = (w - 1) * h;
        let s: f64 = (0..h)
            .flat_map(|y| (0..w.saturating_sub(1)).map(move |x| (x, y)))
            .map(|(x, y)| (f64::from(data[x + 1 + w * y]) - f64::from(data[x + w * y])).abs())
            .sum();
        (n, s)
    } else {
        let n = w * (h - 1);
        let s: f64 = (0..h.saturating_sub(1))
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| (f64::from(data[x + w * (y + 1)]) - f64::from(data[x + w * y])).abs())
            .sum();
        (n, s)
    };
    if pairs == 0 {
        0.0
    } else {
        sum / pairs as f64
    }
}

fn flow_gradient_l1(f: &FlowField) -> f64 {
    let (w, h) = f.dims();
    [f.u(), f.v()]
        .iter()
        .map(|c| mean_forward_diff(c, w, h, true) + mean_forward_diff(c, w, h, false))
        .sum()
}

/// `|grad f01|_1 + |grad f10|_1`, each the sum over (u, v) x (x, y) of mean absolute forward differences.
pub fn smooth_loss(f01: &FlowField, f10: &FlowField) -> Result<f64> {
    if f01.dims() != f10.dims() {
        return Err(Error::Shape(format!(
            "{:?} vs {:?}",
            f01.dims(),
            f10.dims()
        )));
    }
    Ok(flow_gradient_l1(f01) + flow_gradient_l1(f10))
}

/// Squared-neighbour roughness of one slice: left and lower neighbour terms,
/// skipped where they fall off the slice, divided by the pixel count.
pub fn slice_roughness(s: &Slice2D) -> f64 {
    let (w, h) = s.dims();
    let mut sum = 0.0;
    for y in 0..h {
        for x in 0..w {
            let here = f64::from(s.get(x, y));
            if x > 0 {
                sum += (f64::from(s.get(x - 1, y)) - here).powi(2);
            }
            if y + 1 < h {
                sum += (f64::from(s.get(x, y + 1)) - here).powi(2);
            }
        }
    }
    sum / (w * h) as f64
}

/// Mean roughness over every sagittal and every coronal slice.
pub fn tp_smooth_loss(v: &Volume) -> Result<f64> {
    let dims = v.dims();
    if dims.iter().any(|&d| d < 2) {
        return Err(Error::Parameter(format!(
            "tp_smooth_loss needs every extent >= 2, got {dims:?}"
        )));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for axis in [Axis::Sagittal, Axis::Coronal] {
        for k in 0..axis.extent(dims) {
            total += slice_roughness(&v.extract_slice(axis, k)?);
            count += 1;
        }
    }
    Ok(total / count as f64)
}

fn check_lengths(series: &[(&str, usize)]) -> Result<usize> {
    let n = series[0].1;
    if n == 0 {
        return Err(Error::Parameter(format!("{} is empty", series[0].0)));
    }
    if let Some((name, len)) = series.iter().find(|(_, len)| *len != n) {
        return Err(Error::Shape(format!(
            "{name} has {len} entries, expected {n}"
        )));
    }
    Ok(n)
}

fn mean_neg_log(values: &[f64]) -> f64 {
    -values.iter().map(|p| p.ln()).sum::<f64>() / values.len() as f64
}

fn mean_neg_log_complement(values: &[f64]) -> f64 {
    -values.iter().map(|p| (-p).ln_1p()).sum::<f64>() / values.len() as f64
}

/// `-mean log LD(fake) - mean log GD(fake)`.
pub fn adv_loss(ld_fake: &ProbSeries, gd_fake: &ProbSeries) -> Result<f64> {
    check_lengths(&[(ld_fake.name, ld_fake.len()), (gd_fake.name, gd_fake.len())])?;
    Ok(mean_neg_log(&ld_fake.values) + mean_neg_log(&gd_fake.values))
}

/// `-mean log(1 - GD(fake)) - mean log GD(real)`.
pub fn global_disc_loss(gd_fake: &ProbSeries, gd_real: &ProbSeries) -> Result<f64> {
    check_lengths(&[(gd_fake.name, gd_fake.len()), (gd_real.name, gd_real.len())])?;
    Ok(mean_neg_log_complement(&gd_fake.values) + mean_neg_log(&gd_real.values))
}

/// Multitask outputs for `N` synthetic and `N` real slices.
#[derive(Debug, Clone)]
pub struct MultitaskInputs {
    pub ld_fake: ProbSeries,
    pub ld_real: ProbSeries,
    pub oc_fake: ProbSeries,
    pub oc_real: ProbSeries,
    pub y_fake: BinarySeries,
    pub y_real: BinarySeries,
}

/// Discriminator cross-entropy plus the object-classifier term. The classifier
/// term only has the `Y log OC` branch, so negatives contribute nothing.
pub fn multitask_loss(m: &MultitaskInputs) -> Result<f64> {
    let n = check_lengths(&[
        (m.ld_fake.name, m.ld_fake.len()),
        (m.ld_real.name, m.ld_real.len()),
        (m.oc_fake.name, m.oc_fake.len()),
        (m.oc_real.name, m.oc_real.len()),
        ("y_fake", m.y_fake.len()),
        ("y_real", m.y_real.len()),
    ])? as f64;
    let disc = mean_neg_log_complement(&m.ld_fake.values) + mean_neg_log(&m.ld_real.values);
    let weighted = |y: &BinarySeries, p: &ProbSeries| -> f64 {
        -y.0.iter()
            .zip(&p.values)
            .filter(|(&y, _)| y == 1)
            .map(|(_, p)| p.ln())
            .sum::<f64>()
            / n
    };
    let classifier = weighted(&m.y_fake, &m.oc_fake) + weighted(&m.y_real, &m.oc_real);
    Ok(disc + classifier)
}

pub fn total_loss(parts: &LossParts, w: &LossWeights) -> Result<f64> {
    let terms = [
        (parts.rec, w.lambda_rec),
        (parts.per, w.lambda_per),
        (parts.warp, w.lambda_warp),
        (parts.smooth, w.lambda_smooth),
        (parts.adv, w.lambda_adv),
        (parts.tp_smooth, w.lambda_tp_smooth),
    ];
    if terms.iter().any(|(l, _)| !l.is_finite()) {
        return Err(Error::Parameter("loss parts must be finite".into()));
    }
    Ok(terms.iter().map(|(l, lambda)| l * lambda).sum())
}

/// Flat `{term: value, "total": value}` report. Keys serialize sorted.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LossReport(BTreeMap<String, f64>);

impl LossReport {
    pub fn insert(&mut self, term: &str, value: f64) {
        self.0.insert(term.to_string(), value);
    }

    pub fn get(&self, term: &str) -> Option<f64> {
        self.0.get(term).copied()
    }

    /// Adds `"total"` computed from whichever weighted terms are present.
    pub fn with_total(mut self, w: &LossWeights) -> Result<Self> {
        let get = |k: &str| self.get(k).unwrap_or(0.0);
        let parts = LossParts {
            rec: get("l_rec"),
            per: get("l_per"),
            warp: get("l_warp"),
            smooth: get("l_smooth"),
            adv: get("l_adv"),
            tp_smooth: get("l_tp_smooth"),
        };
        let total = total_loss(&parts, w)?;
        self.insert("total", total);
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite floats serialize")
    }
}
