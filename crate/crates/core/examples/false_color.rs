// Renders a room panorama and writes its log-luminance false-color map.
//
// `cargo run --example false_color -- out.png`

use std::path::PathBuf;

use panolux::io::encode_png;
use panolux::metrics::false_color;
use panolux::photometry::luminance_from_hdr;
use panolux::synthscene::{render_scene, SceneKind, SceneSpec};

pub fn run_example() -> panolux::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("panolux_false_color.png"));
    let spec = SceneSpec::new(
        SceneKind::DiskLight {
            center_theta: 0.6,
            center_phi: 1.5,
            angular_radius: 0.2,
            disk_radiance: 50.0,
            ambient_radiance: 1.0,
        },
        256,
        128,
    )
    .with_floor(0.2, 5.0)
    .with_seed(4);
    let (hdr, _) = render_scene(&spec)?;
    let map = false_color(&luminance_from_hdr(&hdr), 10.0, 10_000.0)?;
    let png = encode_png(&map.image)?;
    std::fs::write(&out, &png).map_err(|source| panolux::Error::Io { path: out.clone(), source })?;
    println!("wrote {} ({} bytes), legend {} to {} cd/m2", out.display(), png.len(), map.lo, map.hi);
    Ok(())
}

#[allow(dead_code)]
fn main() -> panolux::Result<()> {
    run_example()
}
