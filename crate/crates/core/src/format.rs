//! On-disk formats: VVOL volumes, VFLO flow fields, and binary PGM export.
//!
//! Both VVOL and VFLO are a five-byte magic (`VVOL\n` / `VFLO\n`), one line of
//! JSON header terminated by `\n`, then a raw little-endian payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::volume::{LabelDtype, LabelVolume, Slice2D, Spacing, Volume};

const VVOL_MAGIC: &[u8] = b"VVOL\n";
const VFLO_MAGIC: &[u8] = b"VFLO\n";

/// A decoded VVOL file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyVolume {
    Image(Volume),
    Labels(LabelVolume),
}

impl AnyVolume {
    pub fn dims(&self) -> [usize; 3] {
        match self {
            AnyVolume::Image(v) => v.dims(),
            AnyVolume::Labels(l) => l.dims(),
        }
    }

    pub fn into_image(self) -> Result<Volume> {
        match self {
            AnyVolume::Image(v) => Ok(v),
            AnyVolume::Labels(_) => {
                Err(Error::Format("expected an f32 volume, found labels".into()))
            }
        }
    }

    pub fn into_labels(self) -> Result<LabelVolume> {
        match self {
            AnyVolume::Labels(l) => Ok(l),
            AnyVolume::Image(_) => Err(Error::Format(
                "expected a label volume, found f32 data".into(),
            )),
        }
    }
}

impl From<Volume> for AnyVolume {
    fn from(v: Volume) -> Self {
        AnyVolume::Image(v)
    }
}

impl From<LabelVolume> for AnyVolume {
    fn from(l: LabelVolume) -> Self {
        AnyVolume::Labels(l)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VolumeHeader {
    dims: [usize; 3],
    spacing: [f64; 3],
    dtype: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    classes: Option<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowHeader {
    dims: [usize; 2],
}

fn encode_with_header<H: Serialize>(magic: &[u8], header: &H, payload_len: usize) -> Vec<u8> {
    let json = serde_json::to_vec(header).expect("header serializes");
    let mut out = Vec::with_capacity(magic.len() + json.len() + 1 + payload_len);
    out.extend_from_slice(magic);
    out.extend_from_slice(&json);
    out.push(b'\n');
    out
}

/// Splits `bytes` into (header JSON, payload) after checking the magic.
fn split_header<'a>(bytes: &'a [u8], magic: &[u8]) -> Result<(&'a [u8], &'a [u8])> {
    let rest = bytes.strip_prefix(magic).ok_or_else(|| {
        Error::Format(format!(
            "missing {:?} magic",
            String::from_utf8_lossy(&magic[..4])
        ))
    })?;
    let nl = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("unterminated header line".into()))?;
    Ok((&rest[..nl], &rest[nl + 1..]))
}

fn check_payload(payload: &[u8], expected: usize) -> Result<()> {
    if payload.len() != expected {
        return Err(Error::Truncated {
            expected,
            found: payload.len(),
        });
    }
    Ok(())
}

pub fn encode_volume(v: &AnyVolume) -> Vec<u8> {
    match v {
        AnyVolume::Image(v) => {
            let header = VolumeHeader {
                dims: v.dims(),
                spacing: v.spacing().as_array(),
                dtype: "f32".into(),
                classes: None,
            };
            let mut out = encode_with_header(VVOL_MAGIC, &header, v.data().len() * 4);
            for x in v.data() {
                out.extend_from_slice(&x.to_le_bytes());
            }
            out
        }
        AnyVolume::Labels(l) => {
            let (dtype, width) = match l.dtype() {
                LabelDtype::U8 => ("u8", 1),
                LabelDtype::U16 => ("u16", 2),
            };
            let header = VolumeHeader {
                dims: l.dims(),
                spacing: l.spacing().as_array(),
                dtype: dtype.into(),
                classes: Some(l.classes()),
            };
            let mut out = encode_with_header(VVOL_MAGIC, &header, l.data().len() * width);
            match l.dtype() {
                // class ids are < 256 whenever the dtype is u8
                LabelDtype::U8 => out.extend(l.data().iter().map(|&c| c as u8)),
                LabelDtype::U16 => {
                    for c in l.data() {
                        out.extend_from_slice(&c.to_le_bytes());
                    }
                }
            }
            out
        }
    }
}

pub fn decode_volume(bytes: &[u8]) -> Result<AnyVolume> {
    let (header, payload) = split_header(bytes, VVOL_MAGIC)?;
    let header: VolumeHeader = serde_json::from_slice(header)
        .map_err(|e| Error::Format(format!("bad VVOL header: {e}")))?;
    let [sx, sy, sz] = header.spacing;
    let spacing = Spacing::new(sx, sy, sz).map_err(|e| Error::Format(e.to_string()))?;
    let dims = header.dims;
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Format(format!("invalid dims {dims:?}")))?;

    match (header.dtype.as_str(), header.classes) {
        ("f32", None) => {
            check_payload(payload, count * 4)?;
            let data = payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            Ok(AnyVolume::Image(Volume::new(dims, spacing, data)?))
        }
        ("f32", Some(_)) => Err(Error::Format(
            "f32 volumes must not carry \"classes\"".into(),
        )),
        ("u8", Some(classes)) => {
            check_payload(payload, count)?;
            let data = payload.iter().map(|&b| u16::from(b)).collect();
            Ok(AnyVolume::Labels(LabelVolume::with_dtype(
                dims,
                spacing,
                classes,
                LabelDtype::U8,
                data,
            )?))
        }
        ("u16", Some(classes)) => {
            check_payload(payload, count * 2)?;
            let data = payload
                .chunks_exact(2)
                .map(|c| u16::from_le_bytes([c[0], c[1]]))
                .collect();
            Ok(AnyVolume::Labels(LabelVolume::with_dtype(
                dims,
                spacing,
                classes,
                LabelDtype::U16,
                data,
            )?))
        }
        ("u8" | "u16", None) => Err(Error::Format("label volumes need \"classes\"".into())),
        (other, _) => Err(Error::Format(format!("unsupported dtype {other:?}"))),
    }
}

pub fn encode_flow(f: &FlowField) -> Vec<u8> {
    let (w, h) = f.dims();
    let mut out = encode_with_header(VFLO_MAGIC, &FlowHeader { dims: [w, h] }, w * h * 8);
    for x in f.u().iter().chain(f.v()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_flow(bytes: &[u8]) -> Result<FlowField> {
    let (header, payload) = split_header(bytes, VFLO_MAGIC)?;
    let header: FlowHeader = serde_json::from_slice(header)
        .map_err(|e| Error::Format(format!("bad VFLO header: {e}")))?;
    let [w, h] = header.dims;
    let n = w
        .checked_mul(h)
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Format(format!("invalid dims {:?}", header.dims)))?;
    check_payload(payload, n * 8)?;
    let mut values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    let u: Vec<f32> = values.by_ref().take(n).collect();
    let v: Vec<f32> = values.collect();
    FlowField::new(w, h, u, v).map_err(|e| match e {
        Error::Shape(m) => Error::Data(m),
        e => e,
    })
}

/// Writes `bytes` to `path` through a sibling temp file, so a failed write leaves nothing behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_volume(path: impl AsRef<Path>) -> Result<AnyVolume> {
    decode_volume(&read_file(path.as_ref())?)
}

pub fn save_volume(v: impl Into<AnyVolume>, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_volume(&v.into()))
}

pub fn load_flow(path: impl AsRef<Path>) -> Result<FlowField> {
    decode_flow(&read_file(path.as_ref())?)
}

pub fn save_flow(f: &FlowField, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), &encode_flow(f))
}

/// Maps `[lo, hi]` onto `0..=255`, clamping, rounding half away from zero.
pub fn encode_pgm(s: &Slice2D, lo: f32, hi: f32) -> Result<Vec<u8>> {
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(Error::Parameter(format!(
            "window needs lo < hi, got ({lo}, {hi})"
        )));
    }
    let (w, h) = s.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    let (lo, hi) = (f64::from(lo), f64::from(hi));
    let scale = 255.0 / (hi - lo);
    out.extend(s.data().iter().map(|&v| {
        let p = ((f64::from(v) - lo) * scale).clamp(0.0, 255.0);
        p.round() as u8
    }));
    Ok(out)
}

pub fn export_pgm(s: &Slice2D, path: impl AsRef<Path>, lo: f32, hi: f32) -> Result<()> {
    let bytes = encode_pgm(s, lo, hi)?;
    write_atomic(path.as_ref(), &bytes)
}

/// Default display window for a slice: its min and max, widened to one unit when the slice is flat.
pub fn default_window(s: &Slice2D) -> (f32, f32) {
    let (lo, hi) = s.min_max();
    if lo < hi {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}
