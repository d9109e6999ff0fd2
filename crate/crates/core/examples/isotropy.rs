//! Pick the number of synthetic slices from the voxel spacing and make an
//! anisotropic volume isotropic, labels included.
//!
//! cargo run --release --example isotropy

use slicefill::interp::{compute_na, impute_volume, ImputeConfig};
use slicefill::phantom::MovingDisk;
use slicefill::volume::Spacing;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (sz, sx) in [(4.0, 0.6), (6.0, 0.5), (2.5, 1.0), (1.0, 1.0)] {
        println!("sz {sz} / sx {sx}: N = {}", compute_na(sz, sx)?);
    }

    let spacing = Spacing::new(0.75, 0.75, 3.0)?;
    let disk = MovingDisk {
        spacing,
        ..MovingDisk::new([48, 48, 17], 4)
    };
    let (full, full_labels, _) = disk.generate()?;
    // keep every 4th slice to mimic a thick-slice acquisition
    let sparse = full.decimate(4)?;
    let sparse_labels = full_labels.decimate(4)?;
    println!(
        "anisotropic input: {:?} at {:?}",
        sparse.dims(),
        sparse.spacing().as_array()
    );

    let out = impute_volume(&sparse, Some(&sparse_labels), &ImputeConfig::default())?;
    println!(
        "imputed {} slices per gap: {:?} at {:?}",
        out.n_per_gap,
        out.volume.dims(),
        out.volume.spacing().as_array()
    );
    // every 4th imputed slice sits on a slice of the dense 3 mm truth
    let labels = out.labels.expect("labels were given").decimate(4)?;
    assert_eq!(labels.dims(), full_labels.dims());
    let agree = labels
        .data()
        .iter()
        .zip(full_labels.data())
        .filter(|(a, b)| a == b)
        .count();
    println!(
        "label agreement with the dense truth: {:.2}%",
        100.0 * agree as f64 / labels.data().len() as f64
    );
    Ok(())
}
