// Renders the three analytic scene kinds and compares the integrated
// illuminance of each panorama with its closed form.

use panolux::photometry::illuminance_of_hdr;
use panolux::synthscene::{render_scene, SceneKind, SceneSpec};

pub fn run_example() -> panolux::Result<()> {
    let kinds = [
        SceneKind::UniformSky { radiance: 1.0 },
        SceneKind::CosineSky { radiance: 1.0 },
        SceneKind::DiskLight {
            center_theta: 0.0,
            center_phi: 0.0,
            angular_radius: 30f64.to_radians(),
            disk_radiance: 1.0,
            ambient_radiance: 0.0,
        },
    ];
    for kind in kinds {
        let spec = SceneSpec::new(kind.clone(), 512, 256);
        let (hdr, analytic) = render_scene(&spec)?;
        let lux = illuminance_of_hdr(&hdr, 1.0)?;
        println!("{kind:?}\n    integrated {lux:.3} lux, closed form {analytic:.3} lux ({:+.3}%)", 100.0 * (lux / analytic - 1.0));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> panolux::Result<()> {
    run_example()
}
