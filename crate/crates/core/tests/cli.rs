mod common;

use std::f64::consts::PI;

use common::*;
use panolux::io::{decode_png, read_rgbe};
use panolux::metrics::ramp_color;
use panolux::photometry::illuminance_of_hdr;
use panolux::synthscene::{SceneKind, SceneSpec};
use panolux::HdrImage;
use tempfile::tempdir;

fn room(phi: f64, seed: u64) -> SceneSpec {
    let kind = SceneKind::DiskLight {
        center_theta: 0.5,
        center_phi: phi,
        angular_radius: 0.3,
        disk_radiance: 150.0,
        ambient_radiance: 2.0,
    };
    SceneSpec::new(kind, 64, 32).with_floor(0.5, 100.0).with_seed(seed)
}

fn exposures() -> Vec<f64> {
    (1..=10).map(|k| 10.0 * k as f64).collect()
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn merge_writes_hdr_and_reports_lux() {
    let dir = tempdir().unwrap();
    let (manifest, _) = write_bracket(dir.path(), "loc", &room(1.0, 1), &[10.0, 40.0, 160.0], 0.0, 0);
    let out = dir.path().join("loc.hdr");
    let json = stdout_json(&panolux(&["merge", s(&manifest), "--out", s(&out)]));
    assert!(json["illuminance_lux"].as_f64().unwrap() > 0.0);
    assert_eq!(json["location_id"], "loc");
    let hdr = read_rgbe(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!((hdr.width(), hdr.height()), (64, 32));
}

#[test]
fn merge_missing_shot_exits_2_naming_the_path() {
    let dir = tempdir().unwrap();
    let (manifest, _) = write_bracket(dir.path(), "loc", &room(1.0, 1), &[10.0, 40.0, 160.0], 0.0, 0);
    std::fs::remove_file(dir.path().join("loc_01.ppm")).unwrap();
    let out = panolux(&["merge", s(&manifest), "--out", s(&dir.path().join("x.hdr"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("loc_01.ppm"));
    assert!(!dir.path().join("x.hdr").exists());
}

#[test]
fn merge_with_calibrated_scale_matches_analytic_lux() {
    let dir = tempdir().unwrap();
    let mut rows = String::from("estimated_lux,true_lux\n");
    for (i, phi) in [0.0, 2.0, 4.0].into_iter().enumerate() {
        let id = format!("cal{i}");
        let (manifest, lux) = write_bracket(dir.path(), &id, &room(phi, 10 + i as u64), &exposures(), 0.0, i as u64);
        let json = stdout_json(&panolux(&["merge", s(&manifest), "--out", s(&dir.path().join(format!("{id}.hdr")))]));
        rows.push_str(&format!("{},{lux}\n", json["illuminance_lux"]));
    }
    let pairs = dir.path().join("pairs.csv");
    std::fs::write(&pairs, rows).unwrap();
    let scale = stdout_json(&panolux(&["calibrate", s(&pairs)]))["scale"].as_f64().unwrap();

    let (manifest, lux) = write_bracket(dir.path(), "test", &room(1.0, 99), &exposures(), 0.0, 9);
    let json = stdout_json(&panolux(&[
        "merge",
        s(&manifest),
        "--out",
        s(&dir.path().join("test.hdr")),
        "--scale",
        &scale.to_string(),
    ]));
    let reported = json["illuminance_lux"].as_f64().unwrap();
    assert!((reported - lux).abs() / lux < 0.05, "{reported} vs {lux}");
}

#[test]
fn illuminance_of_unit_panorama() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("ones.hdr");
    write_hdr(&path, &HdrImage::filled(512, 256, [1.0; 3]).unwrap());
    let one = stdout_json(&panolux(&["illuminance", s(&path)]))["illuminance_lux"].as_f64().unwrap();
    assert!((one - 179.0 * PI).abs() / (179.0 * PI) < 0.01, "{one}");
    let two = stdout_json(&panolux(&["illuminance", s(&path), "--scale", "2"]))["illuminance_lux"].as_f64().unwrap();
    assert_eq!(two, 2.0 * one);
}

#[test]
fn corrupt_hdr_exits_2() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.hdr");
    std::fs::write(&path, b"#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y 4 +X 8\n\x02\x02").unwrap();
    let out = panolux(&["illuminance", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.hdr"));
}

#[test]
fn calibrate_examples() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("pairs.csv");
    std::fs::write(&path, "estimated_lux,true_lux\n1,2\n2,4\n").unwrap();
    let json = stdout_json(&panolux(&["calibrate", s(&path)]));
    assert_eq!(json["scale"].as_f64().unwrap(), 2.0);

    std::fs::write(&path, "estimated_lux,true_lux\n").unwrap();
    assert_eq!(panolux(&["calibrate", s(&path)]).status.code(), Some(2));
    std::fs::write(&path, "estimated_lux,true_lux\n1,abc\n").unwrap();
    assert_eq!(panolux(&["calibrate", s(&path)]).status.code(), Some(2));
}

#[test]
fn calibrate_recovers_injected_scale() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("store.csv");
    let mut rows = String::from("estimated_lux,true_lux\n");
    for i in 0..40 {
        let est = 150.0 + 37.5 * i as f64;
        rows.push_str(&format!("{est},{}\n", 1.4514 * est));
    }
    std::fs::write(&path, rows).unwrap();
    let scale = stdout_json(&panolux(&["calibrate", s(&path)]))["scale"].as_f64().unwrap();
    assert!((scale - 1.4514).abs() < 1e-6);
}

#[test]
fn metrics_perfect_predictions() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a.hdr");
    let b = dir.path().join("b.hdr");
    write_hdr(&a, &HdrImage::filled(8, 4, [1.0; 3]).unwrap());
    write_hdr(&b, &HdrImage::filled(8, 4, [1.0; 3]).unwrap());
    let preds = dir.path().join("pred.csv");
    std::fs::write(&preds, "location_id,pred_lux,hdr_path\nx,100,a.hdr\nx,100,b.hdr\ny,250,\n").unwrap();
    let gt = dir.path().join("gt.csv");
    std::fs::write(&gt, "location_id,gt_lux\nx,100\ny,250\n").unwrap();
    let csv = dir.path().join("report.csv");
    let json = stdout_json(&panolux(&["metrics", s(&preds), s(&gt), "--csv-out", s(&csv)]));
    assert_eq!(json["acc_25"], 1.0);
    assert_eq!(json["acc_10"], 1.0);
    assert_eq!(json["mean_std"], 0.0);
    assert_eq!(json["n_locations"], 2);
    assert_eq!(std::fs::read_to_string(&csv).unwrap(), "mean_std,acc_25,acc_10,n_locations\n0,1,1,2\n");
}

#[test]
fn metrics_unknown_location_exits_2() {
    let dir = tempdir().unwrap();
    let preds = dir.path().join("pred.csv");
    std::fs::write(&preds, "location_id,pred_lux\nz,100\n").unwrap();
    let gt = dir.path().join("gt.csv");
    std::fs::write(&gt, "location_id,gt_lux\nx,100\n").unwrap();
    assert_eq!(panolux(&["metrics", s(&preds), s(&gt)]).status.code(), Some(2));
}

#[test]
fn falsecolor_uniform_is_single_color() {
    let dir = tempdir().unwrap();
    let hdr = dir.path().join("u.hdr");
    write_hdr(&hdr, &HdrImage::filled(32, 16, [0.5; 3]).unwrap());
    let png = dir.path().join("u.png");
    let json = stdout_json(&panolux(&["falsecolor", s(&hdr), "--lo", "1", "--hi", "10000", "--out", s(&png)]));
    assert_eq!(json["lo"], 1.0);
    assert_eq!(json["hi"], 10000.0);
    let image = decode_png(&std::fs::read(&png).unwrap()).unwrap();
    assert_eq!((image.width, image.height), (32, 16));
    let first = image.data[0];
    assert!(image.data.iter().all(|p| *p == first));
    assert_ne!(first, ramp_color(0));
    assert_ne!(first, ramp_color(255));

    let out = panolux(&["falsecolor", s(&hdr), "--lo", "10", "--hi", "1", "--out", s(&png)]);
    assert_eq!(out.status.code(), Some(2));
}

fn demo_config(dir: &std::path::Path, ablation: serde_json::Value) -> std::path::PathBuf {
    let path = dir.join("demo.json");
    let cfg = serde_json::json!({
        "scene_count": 6,
        "width": 32,
        "height": 16,
        "ablation": ablation
    });
    std::fs::write(&path, cfg.to_string()).unwrap();
    path
}

#[test]
fn fit_demo_illuminance_flag_helps() {
    let dir = tempdir().unwrap();
    let cfg = demo_config(dir.path(), serde_json::json!({"steps": 300}));
    let trace = dir.path().join("trace.csv");
    let with = stdout_json(&panolux(&["fit-demo", s(&cfg), "--illuminance", "--trace-out", s(&trace), "--seed", "3"]));
    let without = stdout_json(&panolux(&["fit-demo", s(&cfg), "--seed", "3"]));
    assert_eq!(with["with_illuminance"], true);
    let acc = |v: &serde_json::Value| v["report"]["acc_25"].as_f64().unwrap();
    assert!(acc(&with) >= acc(&without), "{with} vs {without}");
    let text = std::fs::read_to_string(&trace).unwrap();
    assert_eq!(text.lines().count(), 302);
}

#[test]
fn fit_demo_divergence_exits_3() {
    let dir = tempdir().unwrap();
    let start = serde_json::json!({"log_scale": [-10.0, -10.0, -10.0], "gamma": [1.0, 1.0, 1.0], "saturation_boost": 0.0});
    let cfg = demo_config(dir.path(), serde_json::json!({"steps": 50, "lr": 1e4, "initial_model": start}));
    let out = panolux(&["fit-demo", s(&cfg), "--illuminance"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("step"));
}

#[test]
fn thread_cap_does_not_change_output() {
    let dir = tempdir().unwrap();
    let (manifest, _) = write_bracket(dir.path(), "loc", &room(2.0, 5), &[10.0, 40.0, 160.0], 0.5, 4);
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = panolux_env(&["merge", s(&manifest), "--out", s(&out)], &[("PANOLUX_THREADS", threads)]);
        (stdout_json(&o)["illuminance_lux"].clone(), std::fs::read(out).unwrap())
    };
    let (lux1, hdr1) = run("1", "a.hdr");
    let (lux4, hdr4) = run("4", "b.hdr");
    assert_eq!(lux1, lux4);
    assert_eq!(hdr1, hdr4);
    let bad = panolux_env(&["merge", s(&manifest), "--out", s(&dir.path().join("c.hdr"))], &[("PANOLUX_THREADS", "zero")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bad_arguments_exit_2() {
    assert_eq!(panolux(&["merge"]).status.code(), Some(2));
    assert_eq!(panolux(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn library_and_cli_agree_on_illuminance() {
    let dir = tempdir().unwrap();
    let image = HdrImage::from_fn(64, 32, |r, c| [0.1 + r as f64, 1.0 + (c % 5) as f64, 2.0]).unwrap();
    let path = dir.path().join("g.hdr");
    write_hdr(&path, &image);
    let decoded = read_rgbe(&std::fs::read(&path).unwrap()).unwrap();
    let cli = stdout_json(&panolux(&["illuminance", s(&path)]))["illuminance_lux"].as_f64().unwrap();
    assert_eq!(cli, illuminance_of_hdr(&decoded, 1.0).unwrap());
}
