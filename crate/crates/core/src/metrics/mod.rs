//! Segmentation metrics: Dice, RAVD, ASSD and MSSD.
//!
//! Surfaces use 6-connectivity with the volume boundary counted as
//! background. Surface distances are in millimetres and come from an exact
//! anisotropic distance transform of the opposite surface.

mod edt;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::volume::{LabelVolume, Spacing};

/// Surface voxel coordinates of one class, in linear-index order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SurfaceSet(pub Vec<[usize; 3]>);

impl SurfaceSet {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_pair(gt: &LabelVolume, pred: &LabelVolume) -> Result<()> {
    if gt.dims() != pred.dims() {
        return Err(Error::Shape(format!(
            "label dims {:?} vs {:?}",
            gt.dims(),
            pred.dims()
        )));
    }
    Ok(())
}

/// Overlap percentage `200 |A ∩ B| / (|A| + |B|)`; 100 when both masks are empty.
pub fn dice(gt: &LabelVolume, pred: &LabelVolume, class_id: u16) -> Result<f64> {
    check_pair(gt, pred)?;
    let (mut a, mut b, mut both) = (0usize, 0usize, 0usize);
    for (&g, &p) in gt.data().iter().zip(pred.data()) {
        let (g, p) = (g == class_id, p == class_id);
        a += usize::from(g);
        b += usize::from(p);
        both += usize::from(g && p);
    }
    if a + b == 0 {
        return Ok(100.0);
    }
    Ok(200.0 * both as f64 / (a + b) as f64)
}

/// Signed and absolute relative volume difference, `100 (|pred| - |gt|) / |gt|`.
pub fn ravd(gt: &LabelVolume, pred: &LabelVolume, class_id: u16) -> Result<(f64, f64)> {
    check_pair(gt, pred)?;
    let g = gt.count(class_id);
    if g == 0 {
        return Err(Error::UndefinedMetric(format!(
            "RAVD of class {class_id}: ground truth is empty"
        )));
    }
    let signed = 100.0 * (pred.count(class_id) as f64 - g as f64) / g as f64;
    Ok((signed, signed.abs()))
}

fn surface_mask(dims: [usize; 3], fg: &[bool]) -> Vec<bool> {
    let [nx, ny, nz] = dims;
    let mut out = vec![false; fg.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                if !fg[i] {
                    continue;
                }
                let interior = x > 0
                    && x + 1 < nx
                    && y > 0
                    && y + 1 < ny
                    && z > 0
                    && z + 1 < nz
                    && fg[i - 1]
                    && fg[i + 1]
                    && fg[i - nx]
                    && fg[i + nx]
                    && fg[i - nx * ny]
                    && fg[i + nx * ny];
                out[i] = !interior;
            }
        }
    }
    out
}

fn coords(dims: [usize; 3], mask: &[bool]) -> Vec<[usize; 3]> {
    let [nx, ny, _] = dims;
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| [i % nx, (i / nx) % ny, i / (nx * ny)])
        .collect()
}

/// Foreground voxels of `class_id` with at least one non-foreground 6-neighbour.
pub fn surface_voxels(l: &LabelVolume, class_id: u16) -> SurfaceSet {
    let surf = surface_mask(l.dims(), &l.mask(class_id));
    SurfaceSet(coords(l.dims(), &surf))
}

/// Nearest-surface distances in both directions.
struct SurfaceDistances {
    gt_to_pred: Vec<f64>,
    pred_to_gt: Vec<f64>,
}

impl SurfaceDistances {
    fn compute(
        gt: &LabelVolume,
        pred: &LabelVolume,
        class_id: u16,
        spacing: Spacing,
    ) -> Result<Self> {
        check_pair(gt, pred)?;
        let dims = gt.dims();
        let sg = surface_mask(dims, &gt.mask(class_id));
        let sp = surface_mask(dims, &pred.mask(class_id));
        let empty = |m: &[bool]| !m.iter().any(|&b| b);
        if empty(&sg) || empty(&sp) {
            return Err(Error::UndefinedMetric(format!(
                "surface distance of class {class_id}: a surface is empty"
            )));
        }
        let sp_arr = spacing.as_array();
        let directed = |from: &[bool], to: &[bool]| -> Vec<f64> {
            let field = edt::squared_edt(dims, sp_arr, to);
            from.iter()
                .zip(&field)
                .filter(|(&m, _)| m)
                .map(|(_, &d2)| d2.sqrt())
                .collect()
        };
        Ok(SurfaceDistances {
            gt_to_pred: directed(&sg, &sp),
            pred_to_gt: directed(&sp, &sg),
        })
    }

    fn max(&self) -> f64 {
        self.gt_to_pred
            .iter()
            .chain(&self.pred_to_gt)
            .fold(0.0, |m, &d| m.max(d))
    }

    fn mean(&self) -> f64 {
        let n = self.gt_to_pred.len() + self.pred_to_gt.len();
        let sum: f64 = self.gt_to_pred.iter().chain(&self.pred_to_gt).sum();
        // the mean cannot exceed the max; guard against summation rounding
        (sum / n as f64).min(self.max())
    }
}

/// Average symmetric surface distance in mm.
pub fn assd(gt: &LabelVolume, pred: &LabelVolume, class_id: u16, spacing: Spacing) -> Result<f64> {
    Ok(SurfaceDistances::compute(gt, pred, class_id, spacing)?.mean())
}

/// Maximum symmetric surface distance (symmetric Hausdorff over surfaces) in mm.
pub fn mssd(gt: &LabelVolume, pred: &LabelVolume, class_id: u16, spacing: Spacing) -> Result<f64> {
    Ok(SurfaceDistances::compute(gt, pred, class_id, spacing)?.max())
}

/// One row of the report. `None` serializes as JSON `null`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassMetrics {
    pub dice: Option<f64>,
    pub ravd: Option<f64>,
    pub ravd_abs: Option<f64>,
    pub assd_mm: Option<f64>,
    pub mssd_mm: Option<f64>,
}

impl ClassMetrics {
    fn fields(&self) -> [Option<f64>; 5] {
        [
            self.dice,
            self.ravd,
            self.ravd_abs,
            self.assd_mm,
            self.mssd_mm,
        ]
    }

    /// Unweighted mean of each field over the rows where it is defined.
    fn mean_of<'a>(rows: impl Iterator<Item = &'a ClassMetrics>) -> ClassMetrics {
        let mut sums = [(0.0, 0usize); 5];
        for row in rows {
            for (acc, v) in sums.iter_mut().zip(row.fields()) {
                if let Some(v) = v {
                    acc.0 += v;
                    acc.1 += 1;
                }
            }
        }
        let m = sums.map(|(s, n)| (n > 0).then(|| s / n as f64));
        ClassMetrics {
            dice: m[0],
            ravd: m[1],
            ravd_abs: m[2],
            assd_mm: m[3],
            mssd_mm: m[4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub classes: BTreeMap<u16, ClassMetrics>,
    pub mean: ClassMetrics,
}

impl MetricReport {
    /// Canonical JSON: sorted keys, shortest round-trip floats.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string(&value).expect("value serializes")
    }
}

pub fn evaluate_class(gt: &LabelVolume, pred: &LabelVolume, class_id: u16) -> Result<ClassMetrics> {
    let dice = dice(gt, pred, class_id)?;
    let ravd = match ravd(gt, pred, class_id) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    let dist = match SurfaceDistances::compute(gt, pred, class_id, gt.spacing()) {
        Ok(d) => Some(d),
        Err(Error::UndefinedMetric(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ClassMetrics {
        dice: Some(dice),
        ravd: ravd.map(|r| r.0),
        ravd_abs: ravd.map(|r| r.1),
        assd_mm: dist.as_ref().map(SurfaceDistances::mean),
        mssd_mm: dist.as_ref().map(SurfaceDistances::max),
    })
}

/// Metrics for every nonzero class plus their unweighted mean.
pub fn evaluate(gt: &LabelVolume, pred: &LabelVolume) -> Result<MetricReport> {
    check_pair(gt, pred)?;
    if gt.spacing() != pred.spacing() {
        return Err(Error::Shape(format!(
            "label spacing {:?} vs {:?}",
            gt.spacing(),
            pred.spacing()
        )));
    }
    let classes = gt.classes().max(pred.classes());
    let rows = (1..classes)
        .into_par_iter()
        .map(|c| Ok((c as u16, evaluate_class(gt, pred, c as u16)?)))
        .collect::<Result<Vec<_>>>()?;
    let classes: BTreeMap<u16, ClassMetrics> = rows.into_iter().collect();
    let mean = ClassMetrics::mean_of(classes.values());
    Ok(MetricReport { classes, mean })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Spacing {
        Spacing::isotropic(1.0).unwrap()
    }

    fn labels(dims: [usize; 3], fg: &[[usize; 3]]) -> LabelVolume {
        let mut data = vec![0u16; dims.iter().product()];
        for &[x, y, z] in fg {
            data[x + dims[0] * (y + dims[1] * z)] = 1;
        }
        LabelVolume::new(dims, unit(), 2, data).unwrap()
    }

    #[test]
    fn dice_examples() {
        let d = [4, 1, 1];
        let a = labels(d, &[[0, 0, 0], [1, 0, 0]]);
        let b = labels(d, &[[1, 0, 0], [2, 0, 0]]);
        let c = labels(d, &[[3, 0, 0]]);
        assert_eq!(dice(&a, &a, 1).unwrap(), 100.0);
        assert_eq!(dice(&a, &c, 1).unwrap(), 0.0);
        assert_eq!(dice(&a, &b, 1).unwrap(), 50.0);
        let empty = labels(d, &[]);
        assert_eq!(dice(&empty, &empty, 1).unwrap(), 100.0);
        assert_eq!(dice(&empty, &a, 1).unwrap(), 0.0);
    }

    #[test]
    fn ravd_examples() {
        let d = [4, 1, 1];
        let two = labels(d, &[[0, 0, 0], [1, 0, 0]]);
        let three = labels(d, &[[0, 0, 0], [1, 0, 0], [2, 0, 0]]);
        let four = labels(d, &[[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]]);
        assert_eq!(ravd(&two, &two, 1).unwrap(), (0.0, 0.0));
        assert_eq!(ravd(&two, &three, 1).unwrap(), (50.0, 50.0));
        assert_eq!(ravd(&four, &two, 1).unwrap(), (-50.0, 50.0));
        assert!(matches!(
            ravd(&labels(d, &[]), &two, 1),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn surface_examples() {
        let single = labels([3, 3, 3], &[[1, 1, 1]]);
        assert_eq!(surface_voxels(&single, 1).0, vec![[1, 1, 1]]);

        let cube: Vec<[usize; 3]> = (1..4)
            .flat_map(|z| (1..4).flat_map(move |y| (1..4).map(move |x| [x, y, z])))
            .collect();
        let s = surface_voxels(&labels([5, 5, 5], &cube), 1);
        assert_eq!(s.len(), 26);
        assert!(!s.0.contains(&[2, 2, 2]));

        let full = LabelVolume::new([3, 4, 5], unit(), 2, vec![1; 60]).unwrap();
        // all but the 1x2x3 interior block
        assert_eq!(surface_voxels(&full, 1).len(), 60 - 6);
        assert!(surface_voxels(&labels([2, 2, 2], &[]), 1).is_empty());
    }

    #[test]
    fn anisotropic_step() {
        let d = [1, 1, 2];
        let a = labels(d, &[[0, 0, 0]]);
        let b = labels(d, &[[0, 0, 1]]);
        let sp = Spacing::new(1.0, 1.0, 2.5).unwrap();
        assert_eq!(assd(&a, &b, 1, sp).unwrap(), 2.5);
        assert_eq!(mssd(&a, &b, 1, sp).unwrap(), 2.5);
    }

    #[test]
    fn pythagorean_mssd() {
        let d = [4, 5, 1];
        let a = labels(d, &[[0, 0, 0]]);
        let b = labels(d, &[[3, 4, 0]]);
        assert_eq!(mssd(&a, &b, 1, unit()).unwrap(), 5.0);
        assert_eq!(assd(&a, &a, 1, unit()).unwrap(), 0.0);
        assert!(matches!(
            assd(&a, &labels(d, &[]), 1, unit()),
            Err(Error::UndefinedMetric(_))
        ));
    }

    #[test]
    fn report_nulls_and_mean() {
        let dims = [4, 1, 1];
        let gt = LabelVolume::new(dims, unit(), 3, vec![1, 1, 0, 0]).unwrap();
        let pred = LabelVolume::new(dims, unit(), 3, vec![1, 0, 0, 2]).unwrap();
        let r = evaluate(&gt, &pred).unwrap();
        assert_eq!(r.classes[&1].dice, Some(200.0 / 3.0));
        // class 2 is absent from the ground truth
        assert_eq!(r.classes[&2].dice, Some(0.0));
        assert_eq!(r.classes[&2].ravd, None);
        assert_eq!(r.classes[&2].assd_mm, None);
        assert_eq!(r.mean.dice, Some(100.0 / 3.0));
        assert_eq!(r.mean.ravd, r.classes[&1].ravd);
        let json = r.to_json();
        assert!(json.starts_with(r#"{"classes":{"1":{"assd_mm":"#), "{json}");
        assert!(json.contains(r#""2":{"assd_mm":null,"dice":0.0"#), "{json}");
    }

    #[test]
    fn identical_report_is_perfect() {
        let dims = [3, 3, 2];
        let data: Vec<u16> = (0..18).map(|i| (i % 3) as u16).collect();
        let gt = LabelVolume::new(dims, unit(), 3, data).unwrap();
        let r = evaluate(&gt, &gt).unwrap();
        for m in r.classes.values().chain([&r.mean]) {
            assert_eq!(m.dice, Some(100.0));
            assert_eq!(m.ravd, Some(0.0));
            assert_eq!(m.assd_mm, Some(0.0));
            assert_eq!(m.mssd_mm, Some(0.0));
        }
    }

    #[test]
    fn geometry_mismatch() {
        let a = labels([2, 2, 2], &[]);
        let b = labels([2, 2, 1], &[]);
        assert!(matches!(evaluate(&a, &b), Err(Error::Shape(_))));
        let c =
            LabelVolume::new([2, 2, 2], Spacing::isotropic(2.0).unwrap(), 2, vec![0; 8]).unwrap();
        assert!(matches!(evaluate(&a, &c), Err(Error::Shape(_))));
    }
}
