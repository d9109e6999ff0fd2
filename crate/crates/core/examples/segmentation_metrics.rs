//! Dice, RAVD, ASSD and MSSD between a phantom's labels and a shifted copy.
//!
//! cargo run --example segmentation_metrics

use slicefill::metrics::evaluate;
use slicefill::phantom::MovingDisk;
use slicefill::volume::{LabelVolume, Spacing};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spacing = Spacing::new(0.6, 0.6, 4.0)?;
    let disk = MovingDisk {
        spacing,
        ..MovingDisk::new([48, 48, 16], 11)
    };
    let (_, gt, _) = disk.generate()?;

    // a "prediction" that is the ground truth moved one voxel along x
    let [nx, ny, nz] = gt.dims();
    let mut data = vec![0u16; nx * ny * nz];
    for z in 0..nz {
        for y in 0..ny {
            for x in 1..nx {
                data[x + nx * (y + ny * z)] = gt.get(x - 1, y, z);
            }
        }
    }
    let pred = LabelVolume::new(gt.dims(), spacing, gt.classes(), data)?;

    let report = evaluate(&gt, &pred)?;
    let row = &report.classes[&1];
    println!(
        "dice {:.2}  ravd {:?}  assd {:.3} mm  mssd {:.3} mm",
        row.dice.unwrap_or(f64::NAN),
        row.ravd,
        row.assd_mm.unwrap_or(f64::NAN),
        row.mssd_mm.unwrap_or(f64::NAN)
    );
    println!("{}", report.to_json());
    Ok(())
}
