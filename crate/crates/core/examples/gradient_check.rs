// Compares the analytic gradient of the total training loss, and of the
// expansion model behind it, with central finite differences.

use panolux::losses::{total_loss, LossWeights};
use panolux::multishot::simulate_bracket;
use panolux::synthscene::{render_scene, SceneKind, SceneSpec};
use panolux::toyfit::{expand, expand_backward, ExpansionModel};
use panolux::HdrImage;

pub fn run_example() -> panolux::Result<()> {
    let spec = SceneSpec::new(SceneKind::CosineSky { radiance: 3.0 }, 16, 8).with_floor(0.5, 2.0);
    let (target, lux) = render_scene(&spec)?;
    let shot = simulate_bracket(&target, &[20.0], 2.2, 0.0, 0)?.shots.remove(0);
    let weights = LossWeights::default();
    let scale = 1.0 / lux;
    let loss_of = |m: &ExpansionModel| -> panolux::Result<f64> {
        let pred = expand(m, &shot)?;
        Ok(total_loss(&pred, &target, scale, 1.0, &weights, None)?.value)
    };

    let model = ExpansionModel {
        log_scale: [0.2, -0.1, 0.05],
        gamma: [1.8, 2.1, 2.5],
        saturation_boost: 0.3,
    };
    let pred = expand(&model, &shot)?;
    let out = total_loss(&pred, &target, scale, 1.0, &weights, None)?;
    let g = expand_backward(&model, &shot, &out.grad);

    // Pixel-space gradient at a few samples.
    for &(i, c) in &[(3usize, 0usize), (40, 1), (77, 2)] {
        let h = 1e-6 * pred.pixels()[i][c].max(1e-3);
        let at = |v: f64| -> panolux::Result<f64> {
            let mut data = pred.pixels().to_vec();
            data[i][c] = v;
            let p = HdrImage::new(16, 8, data)?;
            Ok(total_loss(&p, &target, scale, 1.0, &weights, None)?.value)
        };
        let x = pred.pixels()[i][c];
        let fd = (at(x + h)? - at(x - h)?) / (2.0 * h);
        println!("dL/dH[{i}][{c}]  analytic {:+.6e}  central difference {fd:+.6e}", out.grad.pixels()[i][c]);
    }

    // Parameter-space gradient.
    for c in 0..3 {
        let h = 1e-6;
        let mut up = model;
        let mut down = model;
        up.log_scale[c] += h;
        down.log_scale[c] -= h;
        let fd = (loss_of(&up)? - loss_of(&down)?) / (2.0 * h);
        println!("dL/dlog_scale[{c}]  analytic {:+.6e}  central difference {fd:+.6e}", g.log_scale[c]);
        let mut up = model;
        let mut down = model;
        up.gamma[c] *= h.exp();
        down.gamma[c] *= (-h).exp();
        let fd = (loss_of(&up)? - loss_of(&down)?) / (2.0 * h);
        println!("dL/dln_gamma[{c}]  analytic {:+.6e}  central difference {fd:+.6e}", g.log_gamma[c]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> panolux::Result<()> {
    run_example()
}
