//! Command-line front end. Machine-readable JSON goes to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::error::Error;
use crate::flow::{estimate_flow, flow_magnitude_stats, FlowField, HsParams};
use crate::format::{self, AnyVolume};
use crate::interp::{impute_volume, ImputeConfig, Method, SliceCount};
use crate::losses::{self, BinarySeries, LossReport, LossWeights, MultitaskInputs, ProbSeries};
use crate::metrics;
use crate::phantom::MovingDisk;
use crate::volume::{Axis, LabelVolume, Slice2D, Volume};

#[derive(Debug, Parser)]
#[command(
    name = "slicefill",
    version,
    about = "Slice imputation for anisotropic volumes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Keep every stride-th axial slice.
    Decimate(DecimateArgs),
    /// Insert synthetic slices between consecutive axial slices.
    Impute(ImputeArgs),
    /// Estimate the forward flow between two axial slices.
    Flow(FlowArgs),
    /// Dice, RAVD, ASSD and MSSD for a pair of label volumes.
    Metrics(MetricsArgs),
    /// Evaluate loss terms and their weighted total.
    Loss(LossArgs),
    /// Generate a synthetic volume with exact labels.
    Phantom(PhantomArgs),
    /// Write one slice as a binary PGM.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct DecimateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(2..))]
    stride: u32,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Flow,
    Linear,
}

#[derive(Debug, Args)]
struct HsArgs {
    #[arg(long, default_value_t = 15.0)]
    alpha: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    iterations: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    levels: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
    warps: u32,
}

impl HsArgs {
    fn params(&self) -> Result<HsParams, CliError> {
        let p = HsParams {
            alpha: self.alpha,
            iterations: self.iterations as usize,
            pyramid_levels: self.levels as usize,
            warps_per_level: self.warps as usize,
        };
        p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
struct ImputeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, requires = "out_labels")]
    labels: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, requires = "labels")]
    out_labels: Option<PathBuf>,
    /// Slices per gap, or "auto" for floor(sz / sx) - 1.
    #[arg(long, default_value = "auto", value_parser = parse_slice_count)]
    n: SliceCount,
    #[arg(long, value_enum, default_value = "flow")]
    method: MethodArg,
    #[command(flatten)]
    hs: HsArgs,
}

fn parse_slice_count(s: &str) -> Result<SliceCount, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(SliceCount::Auto);
    }
    s.parse()
        .map(SliceCount::Fixed)
        .map_err(|_| format!("expected \"auto\" or a non-negative integer, got {s:?}"))
}

#[derive(Debug, Args)]
struct FlowArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Axial slice of --a to use.
    #[arg(long, default_value_t = 0)]
    a_index: usize,
    #[arg(long, default_value_t = 0)]
    b_index: usize,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    hs: HsArgs,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    #[arg(long)]
    gt: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct LossArgs {
    /// Volume for the through-plane smoothness term.
    #[arg(long)]
    volume: Option<PathBuf>,
    /// Ground-truth volume for the reconstruction term (compared slice by slice with --synth).
    #[arg(long, requires = "synth")]
    reference: Option<PathBuf>,
    #[arg(long, requires = "reference")]
    synth: Option<PathBuf>,
    /// Bidirectional flows for the flow smoothness term.
    #[arg(long, requires = "flow10")]
    flow01: Option<PathBuf>,
    #[arg(long, requires = "flow01")]
    flow10: Option<PathBuf>,
    /// Endpoint slices (axial slice 0 of each file) for the warping term; needs both flows.
    #[arg(long, requires_all = ["warp_end", "flow01"])]
    warp_start: Option<PathBuf>,
    #[arg(long, requires = "warp_start")]
    warp_end: Option<PathBuf>,
    /// JSON object of discriminator/classifier outputs.
    #[arg(long)]
    probs: Option<PathBuf>,
    /// Externally computed perceptual loss.
    #[arg(long)]
    per: Option<f64>,
    #[arg(long)]
    weights_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PhantomKind {
    MovingDisk,
}

#[derive(Debug, Args)]
struct PhantomArgs {
    #[arg(long, value_enum, default_value = "moving-disk")]
    kind: PhantomKind,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    out_labels: PathBuf,
    /// N for an N^3 cube, or XxYxZ.
    #[arg(long, default_value = "64x64x33", value_parser = parse_size)]
    size: [usize; 3],
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Disk radius in pixels; defaults to min(X, Y) / 8.
    #[arg(long)]
    radius: Option<f64>,
    /// Disk displacement per axial slice, in pixels.
    #[arg(long, default_value_t = 0.75)]
    shift: f64,
}

fn parse_size(s: &str) -> Result<[usize; 3], String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| format!("bad size {s:?}"))?;
    match nums[..] {
        [n] => Ok([n, n, n]),
        [x, y, z] => Ok([x, y, z]),
        _ => Err(format!("size must be N or XxYxZ, got {s:?}")),
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Axial,
    Sagittal,
    Coronal,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Axis {
        match a {
            AxisArg::Axial => Axis::Axial,
            AxisArg::Sagittal => Axis::Sagittal,
            AxisArg::Coronal => Axis::Coronal,
        }
    }
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    axis: AxisArg,
    #[arg(long)]
    index: usize,
    #[arg(long)]
    out: PathBuf,
    /// Display window "lo,hi"; defaults to the slice range.
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    window: Option<(f32, f32)>,
}

fn parse_window(s: &str) -> Result<(f32, f32), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("window must be lo,hi, got {s:?}"))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f32>()
            .map_err(|_| format!("bad window bound {v:?}"))
    };
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if !lo.is_finite() || !hi.is_finite() || lo >= hi {
        return Err(format!("window needs finite lo < hi, got {s:?}"));
    }
    Ok((lo, hi))
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

type CmdResult = Result<serde_json::Value, CliError>;

/// Parses `args` (including the program name), runs the command, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let rendered = e.render().to_string();
            let _ = if code == 0 {
                write!(stdout, "{rendered}")
            } else {
                write!(stderr, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Decimate(a) => cmd_decimate(a),
        Command::Impute(a) => cmd_impute(a, stderr),
        Command::Flow(a) => cmd_flow(a),
        Command::Metrics(a) => cmd_metrics(a),
        Command::Loss(a) => cmd_loss(a),
        Command::Phantom(a) => cmd_phantom(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(value) => {
            let _ = writeln!(stdout, "{value}");
            0
        }
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            2
        }
        Err(CliError::Runtime(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn distinct_outputs(inputs: &[&Path], outputs: &[&Path]) -> Result<(), CliError> {
    for o in outputs {
        if inputs.contains(o) {
            return Err(CliError::Usage(format!(
                "output {} would overwrite an input",
                o.display()
            )));
        }
    }
    if outputs.len() == 2 && outputs[0] == outputs[1] {
        return Err(CliError::Usage("output paths must differ".into()));
    }
    Ok(())
}

fn load_image(path: &Path) -> Result<Volume, Error> {
    format::load_volume(path)?.into_image()
}

fn load_labels(path: &Path) -> Result<LabelVolume, Error> {
    format::load_volume(path)?.into_labels()
}

fn cmd_decimate(a: DecimateArgs) -> CmdResult {
    distinct_outputs(&[&a.input], &[&a.out])?;
    let stride = a.stride as usize;
    let input = format::load_volume(&a.input)?;
    let z = input.dims()[2];
    let out: AnyVolume = match input {
        AnyVolume::Image(v) => v.decimate(stride)?.into(),
        AnyVolume::Labels(l) => l.decimate(stride)?.into(),
    };
    let kept = out.dims()[2];
    format::save_volume(out, &a.out)?;
    Ok(json!({ "kept": kept, "removed": z - kept }))
}

fn cmd_impute(a: ImputeArgs, stderr: &mut dyn Write) -> CmdResult {
    let mut inputs = vec![a.input.as_path()];
    inputs.extend(a.labels.as_deref());
    let mut outputs = vec![a.out.as_path()];
    outputs.extend(a.out_labels.as_deref());
    distinct_outputs(&inputs, &outputs)?;
    let cfg = ImputeConfig {
        n_slices: a.n,
        method: match a.method {
            MethodArg::Flow => Method::Flow,
            MethodArg::Linear => Method::Linear,
        },
        hs: a.hs.params()?,
        ..ImputeConfig::default()
    };

    let volume = load_image(&a.input)?;
    let labels = a.labels.as_deref().map(load_labels).transpose()?;
    let result = impute_volume(&volume, labels.as_ref(), &cfg)?;
    for w in &result.warnings {
        let _ = writeln!(stderr, "warning: {w}");
    }

    let z_out = result.volume.dims()[2];
    let sz_out = result.volume.spacing().sz;
    if let (Some(path), Some(l)) = (&a.out_labels, result.labels) {
        format::save_volume(l, path)?;
    }
    if let Err(e) = format::save_volume(result.volume, &a.out) {
        if let Some(path) = &a.out_labels {
            let _ = fs::remove_file(path);
        }
        return Err(e.into());
    }
    Ok(json!({
        "n_per_gap": result.n_per_gap,
        "z_in": volume.dims()[2],
        "z_out": z_out,
        "sz_out": sz_out,
    }))
}

fn median(mut xs: Vec<f32>) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        f64::from(xs[n / 2])
    } else {
        0.5 * (f64::from(xs[n / 2 - 1]) + f64::from(xs[n / 2]))
    }
}

/// Median flow over pixels of `i0` brighter than 10% of its range (all pixels if it is flat).
fn support_medians(i0: &Slice2D, f: &FlowField) -> (f64, f64) {
    let (lo, hi) = i0.min_max();
    let cut = lo + 0.1 * (hi - lo);
    let mut idx: Vec<usize> = (0..i0.data().len())
        .filter(|&i| i0.data()[i] > cut)
        .collect();
    if idx.is_empty() {
        idx = (0..i0.data().len()).collect();
    }
    (
        median(idx.iter().map(|&i| f.u()[i]).collect()),
        median(idx.iter().map(|&i| f.v()[i]).collect()),
    )
}

fn cmd_flow(a: FlowArgs) -> CmdResult {
    distinct_outputs(&[&a.a, &a.b], &[&a.out])?;
    let hs = a.hs.params()?;
    let i0 = load_image(&a.a)?.extract_slice(Axis::Axial, a.a_index)?;
    let i1 = load_image(&a.b)?.extract_slice(Axis::Axial, a.b_index)?;
    let f = estimate_flow(&i0, &i1, &hs)?;
    format::save_flow(&f, &a.out)?;
    let (mean, max) = flow_magnitude_stats(&f);
    let (mu, mv) = support_medians(&i0, &f);
    Ok(json!({ "mean": mean, "max": max, "median_u": mu, "median_v": mv }))
}

fn cmd_metrics(a: MetricsArgs) -> CmdResult {
    if let Some(out) = &a.out_json {
        distinct_outputs(&[&a.gt, &a.pred], &[out])?;
    }
    let gt = load_labels(&a.gt)?;
    let pred = load_labels(&a.pred)?;
    let report = metrics::evaluate(&gt, &pred)?;
    if let Some(out) = &a.out_json {
        format::write_atomic(out, report.to_json().as_bytes())?;
    }
    Ok(serde_json::to_value(&report).expect("report serializes"))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbsFile {
    ld_fake: Option<Vec<f64>>,
    ld_real: Option<Vec<f64>>,
    gd_fake: Option<Vec<f64>>,
    gd_real: Option<Vec<f64>>,
    oc_fake: Option<Vec<f64>>,
    oc_real: Option<Vec<f64>>,
    y_fake: Option<Vec<u8>>,
    y_real: Option<Vec<u8>>,
}

fn series(name: &'static str, v: &Option<Vec<f64>>) -> Result<Option<ProbSeries>, Error> {
    v.clone().map(|v| ProbSeries::new(name, v)).transpose()
}

fn cmd_loss(a: LossArgs) -> CmdResult {
    let any_term = a.volume.is_some()
        || a.reference.is_some()
        || a.flow01.is_some()
        || a.probs.is_some()
        || a.per.is_some();
    if !any_term {
        return Err(CliError::Usage(
            "no loss inputs given (use --volume, --reference/--synth, --flow01/--flow10, --probs or --per)".into(),
        ));
    }
    if let Some(per) = a.per {
        if !(per.is_finite() && per >= 0.0) {
            return Err(CliError::Usage(format!(
                "--per must be finite and >= 0, got {per}"
            )));
        }
    }

    let weights = match &a.weights_json {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            LossWeights::from_json(&text)?
        }
        None => LossWeights::default(),
    };

    let mut report = LossReport::default();
    if let Some(per) = a.per {
        report.insert("l_per", per);
    }
    if let Some(path) = &a.volume {
        report.insert("l_tp_smooth", losses::tp_smooth_loss(&load_image(path)?)?);
    }
    if let (Some(r), Some(s)) = (&a.reference, &a.synth) {
        let (r, s) = (load_image(r)?, load_image(s)?);
        if r.dims() != s.dims() {
            return Err(
                Error::Shape(format!("reference {:?} vs synth {:?}", r.dims(), s.dims())).into(),
            );
        }
        let pairs = (0..r.dims()[2])
            .map(|z| {
                Ok((
                    s.extract_slice(Axis::Axial, z)?,
                    r.extract_slice(Axis::Axial, z)?,
                ))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        report.insert("l_rec", losses::rec_loss(&pairs)?);
    }
    if let (Some(p01), Some(p10)) = (&a.flow01, &a.flow10) {
        let (f01, f10) = (format::load_flow(p01)?, format::load_flow(p10)?);
        report.insert("l_smooth", losses::smooth_loss(&f01, &f10)?);
        if let (Some(s), Some(e)) = (&a.warp_start, &a.warp_end) {
            let i0 = load_image(s)?.extract_slice(Axis::Axial, 0)?;
            let i1 = load_image(e)?.extract_slice(Axis::Axial, 0)?;
            report.insert("l_warp", losses::warp_loss(&i0, &i1, &f01, &f10, &[])?);
        }
    }
    if let Some(path) = &a.probs {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: ProbsFile = serde_json::from_str(&text)
            .map_err(|e| Error::Format(format!("bad probs JSON: {e}")))?;
        let ld_fake = series("ld_fake", &p.ld_fake)?;
        let ld_real = series("ld_real", &p.ld_real)?;
        let gd_fake = series("gd_fake", &p.gd_fake)?;
        let gd_real = series("gd_real", &p.gd_real)?;
        let oc_fake = series("oc_fake", &p.oc_fake)?;
        let oc_real = series("oc_real", &p.oc_real)?;
        if let (Some(ld), Some(gd)) = (&ld_fake, &gd_fake) {
            report.insert("l_adv", losses::adv_loss(ld, gd)?);
        }
        if let (Some(f), Some(r)) = (&gd_fake, &gd_real) {
            report.insert("l_global", losses::global_disc_loss(f, r)?);
        }
        if let (Some(ld_fake), Some(ld_real), Some(oc_fake), Some(oc_real), Some(yf), Some(yr)) =
            (ld_fake, ld_real, oc_fake, oc_real, p.y_fake, p.y_real)
        {
            let m = MultitaskInputs {
                ld_fake,
                ld_real,
                oc_fake,
                oc_real,
                y_fake: BinarySeries::new(yf)?,
                y_real: BinarySeries::new(yr)?,
            };
            report.insert("l_mul", losses::multitask_loss(&m)?);
        }
    }
    let report = report.with_total(&weights)?;
    Ok(serde_json::to_value(&report).expect("report serializes"))
}

fn cmd_phantom(a: PhantomArgs) -> CmdResult {
    distinct_outputs(&[], &[&a.out, &a.out_labels])?;
    if a.size.iter().any(|&d| d < 16) {
        return Err(CliError::Usage(format!(
            "--size must be at least 16 per axis, got {:?}",
            a.size
        )));
    }
    let PhantomKind::MovingDisk = a.kind;
    let mut disk = MovingDisk::new(a.size, a.seed);
    disk.shift_per_slice = a.shift;
    if let Some(r) = a.radius {
        disk.radius = r;
    }
    let (volume, labels, path) = disk.generate()?;
    format::save_volume(volume, &a.out)?;
    if let Err(e) = format::save_volume(labels, &a.out_labels) {
        let _ = fs::remove_file(&a.out);
        return Err(e.into());
    }
    Ok(json!({
        "dims": a.size,
        "radius": disk.radius,
        "start": path.start,
        "direction": path.dir,
        "shift_per_slice": disk.shift_per_slice,
    }))
}

fn cmd_export(a: ExportArgs) -> CmdResult {
    distinct_outputs(&[&a.input], &[&a.out])?;
    let axis = Axis::from(a.axis);
    let volume = match format::load_volume(&a.input)? {
        AnyVolume::Image(v) => v,
        AnyVolume::Labels(l) => {
            let data = l.data().iter().map(|&c| f32::from(c)).collect();
            Volume::new(l.dims(), l.spacing(), data)?
        }
    };
    let slice = volume.extract_slice(axis, a.index)?;
    let (lo, hi) = a.window.unwrap_or_else(|| format::default_window(&slice));
    format::export_pgm(&slice, &a.out, lo, hi)?;
    let (w, h) = slice.dims();
    Ok(json!({ "width": w, "height": h, "window": [lo, hi] }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn size_and_window_parsing() {
        assert_eq!(parse_size("32").unwrap(), [32, 32, 32]);
        assert_eq!(parse_size("64x64x33").unwrap(), [64, 64, 33]);
        assert!(parse_size("4x4").is_err());
        assert_eq!(parse_window("-1,2.5").unwrap(), (-1.0, 2.5));
        assert!(parse_window("1,1").is_err());
        assert!(parse_window("3").is_err());
        assert_eq!(parse_slice_count("AUTO").unwrap(), SliceCount::Auto);
        assert_eq!(parse_slice_count("3").unwrap(), SliceCount::Fixed(3));
        assert!(parse_slice_count("-1").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            [
                "slicefill",
                "decimate",
                "--in",
                "a",
                "--out",
                "b",
                "--stride",
                "1",
            ],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 2);
        let code = run(["slicefill", "loss"], &mut out, &mut err);
        assert_eq!(code, 2);
        let code = run(
            ["slicefill", "decimate", "--in", "a", "--out", "a"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, 2);
        assert!(out.is_empty());
    }
}
