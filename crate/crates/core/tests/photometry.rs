use std::f64::consts::PI;

use panolux::photometry::*;
use panolux::HdrImage;
use proptest::prelude::*;

fn panorama() -> impl Strategy<Value = HdrImage> {
    (1usize..=8).prop_flat_map(|half| {
        let h = 2 * half;
        let w = 2 * h;
        prop::collection::vec([0.0f64..50.0, 0.0f64..50.0, 0.0f64..50.0], w * h).prop_map(move |d| HdrImage::new(w, h, d).unwrap())
    })
}

fn pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((1.0f64..5000.0, 1.0f64..5000.0), 1..40)
}

fn sse(pairs: &[(f64, f64)], k: f64) -> f64 {
    pairs.iter().map(|(x, y)| (k * x - y).powi(2)).sum()
}

proptest! {
    #[test]
    fn olse_minimizes_squared_error(p in pairs(), delta in 1e-4f64..0.5) {
        let fit = olse_scale(&p).unwrap();
        let best = sse(&p, fit.scale);
        prop_assert!(best <= sse(&p, fit.scale + delta) * (1.0 + 1e-12));
        prop_assert!(best <= sse(&p, fit.scale - delta) * (1.0 + 1e-12));
        let rms = (best / p.len() as f64).sqrt();
        prop_assert!((fit.residual_rms - rms).abs() <= 1e-9 * rms.max(1.0));
    }

    #[test]
    fn olse_is_equivariant(p in pairs(), k in 0.1f64..10.0) {
        let base = olse_scale(&p).unwrap().scale;
        let scaled: Vec<_> = p.iter().map(|&(x, y)| (x, k * y)).collect();
        let s = olse_scale(&scaled).unwrap().scale;
        prop_assert!((s - k * base).abs() <= 1e-12 * s.abs());
    }

    #[test]
    fn illuminance_is_linear_in_radiance(img in panorama(), k in 0.01f64..100.0) {
        let a = illuminance_of_hdr(&img, 1.0).unwrap();
        let b = illuminance_of_hdr(&img.scaled(k).unwrap(), 1.0).unwrap();
        prop_assert!((b - k * a).abs() <= 1e-12 * (k * a).max(1e-300));
        prop_assert_eq!(illuminance_of_hdr(&img, k).unwrap(), k * a);
    }

    #[test]
    fn lower_hemisphere_is_ignored(img in panorama(), v in 0.0f64..1e4) {
        let h = img.height();
        let changed = HdrImage::from_fn(img.width(), h, |r, c| if 2 * r >= h { [v; 3] } else { img.pixel(r, c) }).unwrap();
        prop_assert_eq!(illuminance_of_hdr(&img, 1.0).unwrap(), illuminance_of_hdr(&changed, 1.0).unwrap());
    }

    #[test]
    fn azimuth_rotation_preserves_illuminance(img in panorama(), shift in 0usize..64) {
        let w = img.width();
        let rotated = HdrImage::from_fn(w, img.height(), |r, c| img.pixel(r, (c + shift) % w)).unwrap();
        let a = illuminance_of_hdr(&img, 1.0).unwrap();
        let b = illuminance_of_hdr(&rotated, 1.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
    }
}

#[test]
fn uniform_sky_converges_to_closed_form() {
    let mut last = f64::INFINITY;
    for h in [16, 64, 256, 1024] {
        let lux = illuminance_of_hdr(&HdrImage::filled(2 * h, h, [1.0; 3]).unwrap(), 1.0).unwrap();
        let err = (lux - 179.0 * PI).abs();
        assert!(err < last, "H={h}");
        last = err;
    }
    assert!(last / (179.0 * PI) < 1e-5);
}

#[test]
fn thread_count_does_not_change_result() {
    let img = HdrImage::from_fn(512, 256, |r, c| [(r * c % 17) as f64 * 0.3, 1.0 / (1.0 + r as f64), 2.5]).unwrap();
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| illuminance_of_hdr(&img, 1.0).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn calibration_rejects_bad_pairs() {
    assert!(olse_scale(&[]).is_err());
    assert!(olse_scale(&[(0.0, 1.0)]).is_err());
    assert!(olse_scale(&[(1.0, -1.0)]).is_err());
    assert!(olse_scale(&[(f64::NAN, 1.0)]).is_err());
}
