//! Write and read back VVOL volumes, label volumes and VFLO flows, and export a
//! slice as PGM.
//!
//! cargo run --example file_formats -- [out_dir]

use slicefill::flow::FlowField;
use slicefill::format::{self, AnyVolume};
use slicefill::phantom::MovingDisk;
use slicefill::volume::Axis;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = match std::env::args().nth(1) {
        Some(d) => std::path::PathBuf::from(d),
        None => std::env::temp_dir().join("slicefill-formats"),
    };
    std::fs::create_dir_all(&dir)?;
    let (volume, labels, _) = MovingDisk::new([32, 32, 16], 1).generate()?;

    format::save_volume(volume.clone(), dir.join("phantom.vvol"))?;
    format::save_volume(labels.clone(), dir.join("labels.vvol"))?;
    let flow = FlowField::constant(32, 32, 0.75, 0.0);
    format::save_flow(&flow, dir.join("shift.vflo"))?;

    let back = format::load_volume(dir.join("phantom.vvol"))?.into_image()?;
    assert_eq!(back, volume);
    match format::load_volume(dir.join("labels.vvol"))? {
        AnyVolume::Labels(l) => println!(
            "labels: {:?}, {} classes stored as {:?}",
            l.dims(),
            l.classes(),
            l.dtype()
        ),
        AnyVolume::Image(_) => unreachable!("labels were written with an integer dtype"),
    }
    assert_eq!(format::load_flow(dir.join("shift.vflo"))?, flow);

    let bytes = std::fs::read(dir.join("phantom.vvol"))?;
    let header = bytes.split(|&b| b == b'\n').nth(1).unwrap_or_default();
    println!("header: {}", String::from_utf8_lossy(header));

    for axis in Axis::ALL {
        let s = volume.extract_slice(axis, axis.extent(volume.dims()) / 2)?;
        let (lo, hi) = format::default_window(&s);
        let path = dir.join(format!("{}.pgm", axis.name()));
        format::export_pgm(&s, &path, lo, hi)?;
        println!("{} {:?} -> {}", axis.name(), s.dims(), path.display());
    }
    Ok(())
}
