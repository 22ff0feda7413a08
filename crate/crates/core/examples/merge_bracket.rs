// Simulates a 20-shot bracket of a synthetic room, recovers the camera
// response, merges, and compares against the known radiance.
//
// `cargo run --release --example merge_bracket -- [noise_sigma]`

use panolux::multishot::{hat_weight, merge_bracket, simulate_bracket, solve_response, CameraResponse, DEFAULT_LAMBDA, DEFAULT_SAMPLES, MID_CODE};
use panolux::photometry::{illuminance_of_hdr, olse_scale};
use panolux::synthscene::{render_scene, SceneKind, SceneSpec};
use panolux::HdrImage;

fn room(center_phi: f64, disk_radiance: f64, seed: u64) -> SceneSpec {
    let kind = SceneKind::DiskLight {
        center_theta: 0.5,
        center_phi,
        angular_radius: 0.3,
        disk_radiance,
        ambient_radiance: 2.0,
    };
    SceneSpec::new(kind, 256, 128).with_floor(0.5, 100.0).with_seed(seed)
}

fn merged(spec: &SceneSpec, exposures: &[f64], noise: f64, seed: u64) -> panolux::Result<(HdrImage, HdrImage, f64, CameraResponse, Vec<bool>)> {
    let (truth, lux) = render_scene(spec)?;
    let bracket = simulate_bracket(&truth, exposures, 2.2, noise, seed)?;
    let response = solve_response(&bracket, DEFAULT_SAMPLES, DEFAULT_LAMBDA)?;
    let hdr = merge_bracket(&bracket, &response)?;
    let n = truth.pixels().len();
    let valid = (0..3 * n)
        .map(|k| bracket.shots.iter().any(|s| hat_weight(s.pixels()[k / 3][k % 3]) > 0.0))
        .collect();
    Ok((truth, hdr, lux, response, valid))
}

pub fn run_noise(noise: f64) -> panolux::Result<()> {
    let exposures: Vec<f64> = (1..=20).map(|k| 5.0 * k as f64).collect();

    let (truth, hdr, lux, response, valid) = merged(&room(1.0, 150.0, 7), &exposures, noise, 1)?;

    let mut worst_g: f64 = 0.0;
    for c in 0..3 {
        let g = response.curve(c);
        let truth_g = |z: usize| 2.2 * (z as f64 / 255.0).ln();
        let offset = truth_g(MID_CODE) - g[MID_CODE];
        for z in 20..=235 {
            worst_g = worst_g.max((g[z] + offset - truth_g(z)).abs());
        }
    }
    println!("response: max |g - g_true| on [20, 235] = {worst_g:.4}");

    let mut ratios: Vec<f64> = Vec::new();
    for (k, ok) in valid.iter().enumerate() {
        let t = truth.pixels()[k / 3][k % 3];
        if *ok && t > 0.0 {
            ratios.push(hdr.pixels()[k / 3][k % 3] / t);
        }
    }
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let errs: Vec<f64> = ratios.iter().map(|r| (r / median - 1.0).abs()).collect();
    let within = errs.iter().filter(|e| **e <= 0.02).count() as f64 / errs.len() as f64;
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    println!("merge: {:.2}% of {} samples within 2% (worst {:.4}), global scale {median:.4}", 100.0 * within, errs.len(), worst);

    let mut pairs = Vec::new();
    for (i, phi) in [0.0, 2.0, 4.0].into_iter().enumerate() {
        let (_, h, l, _, _) = merged(&room(phi, 80.0 + 40.0 * i as f64, 10 + i as u64), &exposures, noise, 20 + i as u64)?;
        pairs.push((illuminance_of_hdr(&h, 1.0)?, l));
    }
    let cal = olse_scale(&pairs)?;
    let estimate = illuminance_of_hdr(&hdr, cal.scale)?;
    println!("illuminance: calibrated scale {:.5}, estimate {estimate:.2} lux vs analytic {lux:.2} ({:+.2}%)", cal.scale, 100.0 * (estimate / lux - 1.0));
    Ok(())
}

pub fn run_example() -> panolux::Result<()> {
    run_noise(0.0)
}

#[allow(dead_code)]
fn main() -> panolux::Result<()> {
    match std::env::args().nth(1).and_then(|a| a.parse().ok()) {
        Some(noise) => run_noise(noise),
        None => run_example(),
    }
}
