//! Volume and label data model.
//!
//! Voxels are stored x-fastest: the voxel at `(x, y, z)` lives at
//! `x + X * (y + Y * z)`. The z axis is the through-plane stacking axis, so
//! axial slices are contiguous runs of `X * Y` voxels.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Physical voxel size in millimetres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacing {
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
}

impl Spacing {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Result<Self> {
        for (name, s) in [("sx", sx), ("sy", sy), ("sz", sz)] {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::Parameter(format!(
                    "spacing {name} must be positive and finite, got {s}"
                )));
            }
        }
        Ok(Spacing { sx, sy, sz })
    }

    pub fn isotropic(s: f64) -> Result<Self> {
        Self::new(s, s, s)
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.sx, self.sy, self.sz]
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.sx * factor, self.sy * factor, self.sz * factor)
    }

    pub(crate) fn with_sz(&self, sz: f64) -> Result<Self> {
        Self::new(self.sx, self.sy, sz)
    }
}

/// Anatomical slicing axis. Axial indexes along z, sagittal along x, coronal along y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Axial,
    Sagittal,
    Coronal,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Axial, Axis::Sagittal, Axis::Coronal];

    pub fn name(&self) -> &'static str {
        match self {
            Axis::Axial => "axial",
            Axis::Sagittal => "sagittal",
            Axis::Coronal => "coronal",
        }
    }

    /// Extent of `dims` along this axis.
    pub fn extent(&self, dims: [usize; 3]) -> usize {
        match self {
            Axis::Axial => dims[2],
            Axis::Sagittal => dims[0],
            Axis::Coronal => dims[1],
        }
    }

    /// (W, H) of slices taken along this axis: axial (X, Y), sagittal (Y, Z), coronal (X, Z).
    pub fn slice_dims(&self, dims: [usize; 3]) -> (usize, usize) {
        let [x, y, z] = dims;
        match self {
            Axis::Axial => (x, y),
            Axis::Sagittal => (y, z),
            Axis::Coronal => (x, z),
        }
    }

    /// Voxel coordinate of slice pixel `(u, w)` in slice `index`.
    #[inline]
    fn voxel(&self, index: usize, u: usize, w: usize) -> (usize, usize, usize) {
        match self {
            Axis::Axial => (u, w, index),
            Axis::Sagittal => (index, u, w),
            Axis::Coronal => (u, index, w),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "axial" | "z" => Ok(Axis::Axial),
            "sagittal" | "x" => Ok(Axis::Sagittal),
            "coronal" | "y" => Ok(Axis::Coronal),
            other => Err(Error::Parameter(format!("unknown axis {other:?}"))),
        }
    }
}

fn check_dims(dims: [usize; 3], len: usize) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::Shape(format!("dims {dims:?} must all be >= 1")));
    }
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Shape(format!("dims {dims:?} overflow")))?;
    if expected != len {
        return Err(Error::Shape(format!(
            "dims {dims:?} need {expected} voxels, data has {len}"
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn linear_index(dims: [usize; 3], x: usize, y: usize, z: usize) -> usize {
    x + dims[0] * (y + dims[1] * z)
}

/// Scalar intensity volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    spacing: Spacing,
    data: Vec<f32>,
}

impl Volume {
    pub fn new(dims: [usize; 3], spacing: Spacing, data: Vec<f32>) -> Result<Self> {
        check_dims(dims, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite intensity at voxel {i}")));
        }
        Ok(Volume {
            dims,
            spacing,
            data,
        })
    }

    pub fn filled(dims: [usize; 3], spacing: Spacing, value: f32) -> Result<Self> {
        let len = dims.iter().product();
        Self::new(dims, spacing, vec![value; len])
    }

    /// Stacks equally sized axial slices along z.
    pub fn from_axial_slices(spacing: Spacing, slices: &[Slice2D]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Shape("no slices to stack".into()))?;
        let (w, h) = first.dims();
        let mut data = Vec::with_capacity(w * h * slices.len());
        for s in slices {
            if s.dims() != (w, h) {
                return Err(Error::Shape(format!(
                    "slice dims {:?} differ from {:?}",
                    s.dims(),
                    (w, h)
                )));
            }
            data.extend_from_slice(s.data());
        }
        Self::new([w, h, slices.len()], spacing, data)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.data[linear_index(self.dims, x, y, z)]
    }

    pub fn axial(&self, z: usize) -> &[f32] {
        let n = self.dims[0] * self.dims[1];
        &self.data[z * n..(z + 1) * n]
    }

    pub fn extract_slice(&self, axis: Axis, index: usize) -> Result<Slice2D> {
        let data = gather_slice(self.dims, &self.data, axis, index)?;
        let (w, h) = axis.slice_dims(self.dims);
        Ok(Slice2D { w, h, data })
    }

    pub fn decimate(&self, stride: usize) -> Result<Volume> {
        let (kept, sz) = decimate_axial(self.dims, self.spacing, stride)?;
        let data = kept.iter().flat_map(|&z| self.axial(z)).copied().collect();
        Ok(Volume {
            dims: [self.dims[0], self.dims[1], kept.len()],
            spacing: sz,
            data,
        })
    }

    pub(crate) fn from_parts_unchecked(dims: [usize; 3], spacing: Spacing, data: Vec<f32>) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        Volume {
            dims,
            spacing,
            data,
        }
    }
}

/// On-disk integer width for label volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelDtype {
    U8,
    U16,
}

impl LabelDtype {
    pub fn for_classes(classes: u32) -> LabelDtype {
        if classes <= 256 {
            LabelDtype::U8
        } else {
            LabelDtype::U16
        }
    }

    pub fn max_classes(&self) -> u32 {
        match self {
            LabelDtype::U8 => 256,
            LabelDtype::U16 => 65536,
        }
    }
}

/// Integer segmentation volume with class ids in `0..classes` (0 is background).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelVolume {
    dims: [usize; 3],
    spacing: Spacing,
    classes: u32,
    dtype: LabelDtype,
    data: Vec<u16>,
}

impl LabelVolume {
    /// Builds a label volume stored with the narrowest dtype that fits `classes`.
    pub fn new(dims: [usize; 3], spacing: Spacing, classes: u32, data: Vec<u16>) -> Result<Self> {
        Self::with_dtype(
            dims,
            spacing,
            classes,
            LabelDtype::for_classes(classes),
            data,
        )
    }

    pub fn with_dtype(
        dims: [usize; 3],
        spacing: Spacing,
        classes: u32,
        dtype: LabelDtype,
        data: Vec<u16>,
    ) -> Result<Self> {
        check_dims(dims, data.len())?;
        if classes == 0 || classes > dtype.max_classes() {
            return Err(Error::Parameter(format!(
                "class count {classes} invalid for {dtype:?}"
            )));
        }
        if let Some(i) = data.iter().position(|&c| u32::from(c) >= classes) {
            return Err(Error::Data(format!(
                "class id {} at voxel {i} outside 0..{classes}",
                data[i]
            )));
        }
        Ok(LabelVolume {
            dims,
            spacing,
            classes,
            dtype,
            data,
        })
    }

    /// Binary mask volume: `true` becomes class 1.
    pub fn from_mask(dims: [usize; 3], spacing: Spacing, mask: &[bool]) -> Result<Self> {
        let data = mask.iter().map(|&m| u16::from(m)).collect();
        Self::new(dims, spacing, 2, data)
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn classes(&self) -> u32 {
        self.classes
    }

    pub fn dtype(&self) -> LabelDtype {
        self.dtype
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.data[linear_index(self.dims, x, y, z)]
    }

    pub fn axial(&self, z: usize) -> &[u16] {
        let n = self.dims[0] * self.dims[1];
        &self.data[z * n..(z + 1) * n]
    }

    pub fn mask(&self, class_id: u16) -> Vec<bool> {
        self.data.iter().map(|&c| c == class_id).collect()
    }

    pub fn count(&self, class_id: u16) -> usize {
        self.data.iter().filter(|&&c| c == class_id).count()
    }

    pub fn decimate(&self, stride: usize) -> Result<LabelVolume> {
        let (kept, spacing) = decimate_axial(self.dims, self.spacing, stride)?;
        let data = kept.iter().flat_map(|&z| self.axial(z)).copied().collect();
        Ok(LabelVolume {
            dims: [self.dims[0], self.dims[1], kept.len()],
            spacing,
            classes: self.classes,
            dtype: self.dtype,
            data,
        })
    }

    pub(crate) fn from_parts_unchecked(
        dims: [usize; 3],
        spacing: Spacing,
        classes: u32,
        dtype: LabelDtype,
        data: Vec<u16>,
    ) -> Self {
        debug_assert_eq!(dims.iter().product::<usize>(), data.len());
        LabelVolume {
            dims,
            spacing,
            classes,
            dtype,
            data,
        }
    }
}

/// A 2D scalar image, row-major: pixel `(x, y)` at `x + W * y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice2D {
    w: usize,
    h: usize,
    data: Vec<f32>,
}

impl Slice2D {
    pub fn new(w: usize, h: usize, data: Vec<f32>) -> Result<Self> {
        if w == 0 || h == 0 || w.checked_mul(h) != Some(data.len()) {
            return Err(Error::Shape(format!(
                "slice {w}x{h} cannot hold {} pixels",
                data.len()
            )));
        }
        Ok(Slice2D { w, h, data })
    }

    pub fn filled(w: usize, h: usize, value: f32) -> Result<Self> {
        Self::new(w, h, vec![value; w * h])
    }

    pub fn from_fn(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> Result<Self> {
        let data = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(w, h, data)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.w, self.h)
    }

    pub fn width(&self) -> usize {
        self.w
    }

    pub fn height(&self) -> usize {
        self.h
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[x + self.w * y]
    }

    pub fn min_max(&self) -> (f32, f32) {
        self.data
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub(crate) fn from_parts_unchecked(w: usize, h: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(w * h, data.len());
        Slice2D { w, h, data }
    }
}

/// Copies the slice of `data` (laid out as `dims`) at `index` along `axis`.
pub(crate) fn gather_slice<T: Copy>(
    dims: [usize; 3],
    data: &[T],
    axis: Axis,
    index: usize,
) -> Result<Vec<T>> {
    let extent = axis.extent(dims);
    if index >= extent {
        return Err(Error::Bounds { index, extent });
    }
    let (w, h) = axis.slice_dims(dims);
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let (x, y, z) = axis.voxel(index, col, row);
            out.push(data[linear_index(dims, x, y, z)]);
        }
    }
    Ok(out)
}

/// Extracts a copy of one slice along `axis`.
pub fn extract_slice(v: &Volume, axis: Axis, index: usize) -> Result<Slice2D> {
    v.extract_slice(axis, index)
}

/// Keeps axial slices whose index is a multiple of `stride`; through-plane spacing grows by `stride`.
pub fn decimate(v: &Volume, stride: usize) -> Result<Volume> {
    v.decimate(stride)
}

fn decimate_axial(
    dims: [usize; 3],
    spacing: Spacing,
    stride: usize,
) -> Result<(Vec<usize>, Spacing)> {
    if stride < 2 {
        return Err(Error::Parameter(format!(
            "stride must be >= 2, got {stride}"
        )));
    }
    let kept: Vec<usize> = (0..dims[2]).step_by(stride).collect();
    Ok((kept, spacing.with_sz(spacing.sz * stride as f64)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn enumerated(dims: [usize; 3]) -> Volume {
        let n = dims.iter().product::<usize>();
        Volume::new(
            dims,
            Spacing::isotropic(1.0).unwrap(),
            (0..n).map(|i| i as f32).collect(),
        )
        .unwrap()
    }

    #[test]
    fn axial_slices_follow_x_fastest_layout() {
        let v = enumerated([2, 2, 2]);
        assert_eq!(
            v.extract_slice(Axis::Axial, 0).unwrap().data(),
            &[0.0, 1.0, 2.0, 3.0]
        );
        assert_eq!(
            v.extract_slice(Axis::Axial, 1).unwrap().data(),
            &[4.0, 5.0, 6.0, 7.0]
        );
    }

    #[test]
    fn sagittal_and_coronal_orders() {
        let v = enumerated([2, 2, 2]);
        // sagittal x=1: (y, z) grid, y fastest
        assert_eq!(
            v.extract_slice(Axis::Sagittal, 1).unwrap().data(),
            &[1.0, 3.0, 5.0, 7.0]
        );
        // coronal y=1: (x, z) grid, x fastest
        assert_eq!(
            v.extract_slice(Axis::Coronal, 1).unwrap().data(),
            &[2.0, 3.0, 6.0, 7.0]
        );
        let s = v.extract_slice(Axis::Sagittal, 0).unwrap();
        assert_eq!(s.dims(), (2, 2));
    }

    #[test]
    fn single_voxel_any_axis() {
        let v = Volume::new([1, 1, 1], Spacing::isotropic(1.0).unwrap(), vec![3.5]).unwrap();
        for axis in Axis::ALL {
            assert_eq!(v.extract_slice(axis, 0).unwrap().data(), &[3.5]);
        }
    }

    #[test]
    fn out_of_range_index_is_bounds_error() {
        let v = enumerated([2, 3, 4]);
        assert!(matches!(
            v.extract_slice(Axis::Axial, 4),
            Err(Error::Bounds {
                index: 4,
                extent: 4
            })
        ));
        assert!(matches!(
            v.extract_slice(Axis::Sagittal, 2),
            Err(Error::Bounds { extent: 2, .. })
        ));
    }

    #[test]
    fn slices_reassemble_volume() {
        let v = enumerated([3, 4, 5]);
        for axis in Axis::ALL {
            let mut rebuilt = vec![f32::NAN; v.data().len()];
            for k in 0..axis.extent(v.dims()) {
                let s = v.extract_slice(axis, k).unwrap();
                let (w, h) = s.dims();
                for row in 0..h {
                    for col in 0..w {
                        let (x, y, z) = axis.voxel(k, col, row);
                        rebuilt[linear_index(v.dims(), x, y, z)] = s.get(col, row);
                    }
                }
            }
            assert_eq!(rebuilt, v.data(), "axis {axis}");
        }
    }

    #[test]
    fn decimate_keep_rule() {
        let keep = |z: usize, stride: usize| {
            let v = enumerated([1, 1, z]);
            v.decimate(stride).unwrap().data().to_vec()
        };
        assert_eq!(keep(8, 4), vec![0.0, 4.0]);
        assert_eq!(keep(9, 4), vec![0.0, 4.0, 8.0]);
        assert_eq!(keep(1, 3), vec![0.0]);
        let v = enumerated([1, 1, 8]);
        assert_eq!(v.decimate(4).unwrap().spacing().sz, 4.0);
        assert!(matches!(v.decimate(1), Err(Error::Parameter(_))));
    }

    #[test]
    fn invariants_rejected() {
        let sp = Spacing::isotropic(1.0).unwrap();
        assert!(Volume::new([2, 2, 2], sp, vec![0.0; 7]).is_err());
        assert!(Volume::new([1, 1, 1], sp, vec![f32::NAN]).is_err());
        assert!(Volume::new([0, 1, 1], sp, vec![]).is_err());
        assert!(Spacing::new(1.0, 0.0, 1.0).is_err());
        assert!(Spacing::new(1.0, 1.0, f64::INFINITY).is_err());
        assert!(LabelVolume::new([1, 1, 1], sp, 2, vec![2]).is_err());
        assert!(Slice2D::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn axis_parsing() {
        assert_eq!("Sagittal".parse::<Axis>().unwrap(), Axis::Sagittal);
        assert!("oblique".parse::<Axis>().is_err());
    }
}
