// Fits a device scale between HDR-derived and metered illuminance.

use panolux::photometry::olse_scale;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

pub fn run_example() -> panolux::Result<()> {
    let truth = 1.4514;
    let estimates: Vec<f64> = (0..60).map(|i| 120.0 + 35.0 * i as f64).collect();

    let exact: Vec<(f64, f64)> = estimates.iter().map(|&x| (x, truth * x)).collect();
    let fit = olse_scale(&exact)?;
    println!("noise-free: scale {:.9}, residual rms {:.3e}", fit.scale, fit.residual_rms);

    let sigma = 25.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, sigma).expect("valid sigma");
    let noisy: Vec<(f64, f64)> = estimates.iter().map(|&x| (x, truth * x + noise.sample(&mut rng))).collect();
    let fit = olse_scale(&noisy)?;
    println!("noise sigma {sigma} lux: scale {:.5}, residual rms {:.2} lux", fit.scale, fit.residual_rms);
    Ok(())
}

#[allow(dead_code)]
fn main() -> panolux::Result<()> {
    run_example()
}
