use panolux::losses::LossWeights;
use panolux::multishot::simulate_bracket;
use panolux::photometry::illuminance_of_hdr;
use panolux::synthscene::{render_scene, SceneKind, SceneSpec};
use panolux::toyfit::*;

fn room() -> SceneSpec {
    let kind = SceneKind::DiskLight {
        center_theta: 0.6,
        center_phi: 2.0,
        angular_radius: 0.35,
        disk_radiance: 12.0,
        ambient_radiance: 1.5,
    };
    SceneSpec::new(kind, 64, 32).with_floor(0.5, 4.0).with_seed(3)
}

fn batches(truth: &ExpansionModel, gt_lux: impl Fn(&panolux::HdrImage) -> f64) -> Vec<FitBatch> {
    let (hdr, _) = render_scene(&room()).unwrap();
    let bracket = simulate_bracket(&hdr, &[10.0, 20.0, 40.0], 2.2, 0.0, 0).unwrap();
    bracket
        .shots
        .into_iter()
        .map(|ldr| {
            let target = expand(truth, &ldr).unwrap();
            let gt = gt_lux(&target);
            FitBatch { ldr, target, gt_lux: gt }
        })
        .collect()
}

const TRUTH: ExpansionModel = ExpansionModel {
    log_scale: [0.3, 0.1, -0.2],
    gamma: [2.2, 2.0, 2.4],
    saturation_boost: 0.0,
};

#[test]
fn recovers_generating_gamma() {
    let data = batches(&TRUTH, |_| 1.0);
    let w = LossWeights {
        lambda_log_l2: 1.0,
        ..LossWeights::zero()
    };
    let r = fit(&ExpansionModel::default(), &data, 1.0, &w, 2000, 0.1).unwrap();
    for c in 0..3 {
        assert!((r.model.gamma[c] - TRUTH.gamma[c]).abs() < 0.05, "{:?}", r.model);
    }
    assert!(r.trace.last().unwrap().total <= r.trace[0].total);
}

#[test]
fn consistent_meter_readings_give_accurate_lux() {
    let unit = 500.0;
    let data = batches(&TRUTH, |h| illuminance_of_hdr(h, 1.0).unwrap() / unit);
    let r = fit(&ExpansionModel::default(), &data, 1.0 / unit, &LossWeights::default(), 2000, DEFAULT_LR).unwrap();
    for b in &data {
        let lux = illuminance_of_hdr(&expand(&r.model, &b.ldr).unwrap(), 1.0).unwrap();
        let gt = b.gt_lux * unit;
        assert!((lux - gt).abs() / gt < 0.05, "{lux} vs {gt}");
    }
}

#[test]
fn vanishing_learning_rate_keeps_parameters() {
    let data = batches(&TRUTH, |_| 1.0);
    let start = ExpansionModel {
        log_scale: [0.2, -0.1, 0.05],
        gamma: [1.5, 2.5, 3.0],
        saturation_boost: 0.5,
    };
    let r = fit(&start, &data, 1.0, &LossWeights::default(), 5, 1e-300).unwrap();
    for c in 0..3 {
        assert!((r.model.log_scale[c] - start.log_scale[c]).abs() <= 1e-15);
        assert!((r.model.gamma[c] - start.gamma[c]).abs() <= 4.0 * f64::EPSILON * start.gamma[c]);
    }
    assert!((r.model.saturation_boost - start.saturation_boost).abs() <= 1e-15);
}

#[test]
fn ablation_is_deterministic() {
    let scenes = generate_scenes(5, 16, 8, 11);
    let config = AblationConfig {
        steps: 20,
        seed: 11,
        ..Default::default()
    };
    let a = ablation_run(&scenes, true, &config).unwrap();
    let b = ablation_run(&scenes, true, &config).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn trace_csv_has_one_row_per_evaluation() {
    let data = batches(&TRUTH, |_| 1.0);
    let r = fit(&ExpansionModel::default(), &data, 1.0, &LossWeights::default(), 4, DEFAULT_LR).unwrap();
    let csv = r.trace_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "step,total,log_l2,tv,illuminance");
    assert_eq!(lines.len(), 6);
    assert!(lines[5].starts_with("4,"));
}
