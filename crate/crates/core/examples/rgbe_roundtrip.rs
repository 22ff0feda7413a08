// Writes a synthetic panorama as Radiance `.hdr`, reads it back and
// reports the quantization error and the run-length savings.

use panolux::io::{read_rgbe, write_rgbe, write_rgbe_with, ScanlineEncoding};
use panolux::synthscene::{render_scene, SceneKind, SceneSpec};

pub fn run_example() -> panolux::Result<()> {
    let spec = SceneSpec::new(
        SceneKind::DiskLight {
            center_theta: 0.4,
            center_phi: 3.0,
            angular_radius: 0.25,
            disk_radiance: 500.0,
            ambient_radiance: 0.8,
        },
        256,
        128,
    )
    .with_floor(0.05, 20.0);
    let (hdr, _) = render_scene(&spec)?;

    let rle = write_rgbe(&hdr)?;
    let flat = write_rgbe_with(&hdr, ScanlineEncoding::Flat)?;
    let back = read_rgbe(&rle)?;
    assert_eq!(read_rgbe(&flat)?, back);

    let mut worst: f64 = 0.0;
    for (a, b) in hdr.pixels().iter().zip(back.pixels()) {
        let peak = a.iter().cloned().fold(0.0, f64::max);
        for c in 0..3 {
            if peak > 0.0 {
                worst = worst.max((a[c] - b[c]).abs() / peak);
            }
        }
    }
    println!("{}x{} panorama: {} bytes RLE, {} bytes flat", hdr.width(), hdr.height(), rle.len(), flat.len());
    println!("largest error relative to the pixel maximum: {worst:.5} (bound {:.5})", 1.0 / 256.0);
    Ok(())
}

#[allow(dead_code)]
fn main() -> panolux::Result<()> {
    run_example()
}
