//! Evaluate every loss term on a phantom and its linear re-imputation, then
//! combine them with the default weights.
//!
//! cargo run --release --example loss_terms

use slicefill::flow::{estimate_flow, HsParams};
use slicefill::interp::{impute_volume, ImputeConfig, Method, SliceCount};
use slicefill::losses::*;
use slicefill::phantom::MovingDisk;
use slicefill::volume::Axis;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (truth, _, _) = MovingDisk::new([32, 32, 17], 3).generate()?;
    let sparse = truth.decimate(2)?;
    let cfg = ImputeConfig {
        n_slices: SliceCount::Fixed(1),
        method: Method::Linear,
        ..ImputeConfig::default()
    };
    let synth = impute_volume(&sparse, None, &cfg)?.volume;

    let pairs = (1..17)
        .step_by(2)
        .map(|z| {
            Ok((
                synth.extract_slice(Axis::Axial, z)?,
                truth.extract_slice(Axis::Axial, z)?,
            ))
        })
        .collect::<slicefill::error::Result<Vec<_>>>()?;
    let i0 = truth.extract_slice(Axis::Axial, 0)?;
    let i1 = truth.extract_slice(Axis::Axial, 2)?;
    let f01 = estimate_flow(&i0, &i1, &HsParams::default())?;
    let f10 = estimate_flow(&i1, &i0, &HsParams::default())?;

    let p = |v: f64| ProbSeries::new("p", vec![v; 4]);
    let mut report = LossReport::default();
    report.insert("l_rec", rec_loss(&pairs)?);
    report.insert("l_warp", warp_loss(&i0, &i1, &f01, &f10, &[])?);
    report.insert("l_smooth", smooth_loss(&f01, &f10)?);
    report.insert("l_tp_smooth", tp_smooth_loss(&synth)?);
    report.insert("l_adv", adv_loss(&p(0.7)?, &p(0.6)?)?);
    report.insert("l_global", global_disc_loss(&p(0.4)?, &p(0.8)?)?);
    let report = report.with_total(&LossWeights::default())?;
    println!("{}", report.to_json());
    println!("tp smoothness of the truth: {:.6}", tp_smooth_loss(&truth)?);
    Ok(())
}
