#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use panolux::io::{encode_ppm, write_rgbe, Rgb8Image};
use panolux::multishot::simulate_bracket;
use panolux::synthscene::{render_scene, SceneSpec};
use panolux::HdrImage;

pub const FD_REL_TOL: f64 = 1e-4;
pub const FD_ABS_FLOOR: f64 = 1e-8;

/// Central difference of `f` along coordinate `x`, with a step relative to
/// the coordinate's magnitude.
pub fn central_difference(x: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = 1e-5 * x.abs().max(1e-3);
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative agreement with an absolute floor for near-zero derivatives.
pub fn gradients_agree(analytic: f64, numeric: f64) -> bool {
    let diff = (analytic - numeric).abs();
    diff <= FD_ABS_FLOOR || diff <= FD_REL_TOL * analytic.abs().max(numeric.abs())
}

pub fn hdr_with(image: &HdrImage, index: usize, channel: usize, value: f64) -> HdrImage {
    let mut data = image.pixels().to_vec();
    data[index][channel] = value;
    HdrImage::new(image.width(), image.height(), data).unwrap()
}

/// Renders `spec`, simulates a bracket, writes the shots as PPM plus a
/// manifest into `dir`, and returns the manifest path and analytic lux.
pub fn write_bracket(dir: &Path, location_id: &str, spec: &SceneSpec, exposures: &[f64], noise: f64, seed: u64) -> (PathBuf, f64) {
    let (hdr, lux) = render_scene(spec).unwrap();
    let bracket = simulate_bracket(&hdr, exposures, 2.2, noise, seed).unwrap();
    let mut entries = Vec::new();
    for (i, shot) in bracket.shots.iter().enumerate() {
        let name = format!("{location_id}_{i:02}.ppm");
        std::fs::write(dir.join(&name), encode_ppm(&Rgb8Image::from(shot))).unwrap();
        entries.push(serde_json::json!({"path": name, "exposure_ms": shot.exposure_ms()}));
    }
    let manifest = dir.join(format!("{location_id}.json"));
    let body = serde_json::json!({"location_id": location_id, "entries": entries, "gt_lux": lux});
    std::fs::write(&manifest, body.to_string()).unwrap();
    (manifest, lux)
}

pub fn write_hdr(path: &Path, image: &HdrImage) {
    std::fs::write(path, write_rgbe(image).unwrap()).unwrap();
}

pub fn panolux(args: &[&str]) -> Output {
    panolux_env(args, &[])
}

pub fn panolux_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_panolux"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("panolux runs")
}

pub fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}
