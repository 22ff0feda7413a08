// Trains the expansion model with and without the illuminance term on
// scenes whose reference HDRs are 1.5x too bright, then compares
// held-out illuminance accuracy.
//
// `cargo run --release --example ablation -- 0 1 2 3 4`

use panolux::toyfit::{ablation_fit, generate_scenes, AblationConfig};

pub fn run_seeds(seeds: &[u64], width: usize, height: usize) -> panolux::Result<()> {
    for &seed in seeds {
        let scenes = generate_scenes(10, width, height, seed);
        let config = AblationConfig {
            seed,
            ..Default::default()
        };
        for flag in [false, true] {
            let (report, fit) = ablation_fit(&scenes, flag, &config)?;
            let last = fit.trace.last().expect("trace is never empty");
            println!(
                "seed {seed} illuminance={flag:<5} acc_25 {:.3} acc_10 {:.3} mean_std {:.4}  loss {:.4} -> {:.4}  gamma {:.3?}",
                report.acc_25,
                report.acc_10,
                report.mean_std.unwrap_or(f64::NAN),
                fit.trace[0].total,
                last.total,
                fit.model.gamma,
            );
        }
    }
    Ok(())
}

pub fn run_example() -> panolux::Result<()> {
    run_seeds(&[0], 32, 16)
}

#[allow(dead_code)]
fn main() -> panolux::Result<()> {
    let seeds: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    if seeds.is_empty() {
        run_example()
    } else {
        run_seeds(&seeds, 64, 32)
    }
}
