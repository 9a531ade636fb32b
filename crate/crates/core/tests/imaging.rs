use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vgradar::array::ArrayLayout;
use vgradar::experiment::{run_image, ExperimentConfig, ImagingMethod};
use vgradar::imaging::{axis, field_for_layout, find_peaks, matched_filter_reconstruct, reconstruct, StoltOptions};
use vgradar::waveform::{PointTarget, RadarConfig};
use vgradar::{Complex64, Vec3};

fn setup() -> (RadarConfig, ArrayLayout) {
    let cfg = RadarConfig::standard();
    let layout = ArrayLayout::standard(&cfg);
    (cfg, layout)
}

#[test]
fn unit_scatterer_never_exceeds_coherent_bound() {
    let (cfg, layout) = setup();
    let bound = (layout.n_channels() * cfg.n_steps) as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let p = Vec3::new(rng.random_range(-0.05..0.05), rng.random_range(-0.05..0.05), rng.random_range(0.5..1.0));
        let c = (p / 0.01).map(|v| v.round() * 0.01);
        let (x, y, z) = (axis(c.x - 0.04, 0.01, 9), axis(c.y - 0.04, 0.01, 9), axis(c.z - 0.06, 0.015, 9));
        let f = field_for_layout(&[PointTarget::unit(p)], &layout, &cfg).unwrap();
        let s = reconstruct(&f, &x, &y, &z, &StoltOptions::default()).unwrap();
        let m = matched_filter_reconstruct(&f, &x, &y, &z).unwrap();
        for v in s.voxels.iter().chain(&m.voxels) {
            assert!(v.norm() <= bound * (1.0 + 1e-9), "{} > {bound}", v.norm());
        }
    }
}

#[test]
fn separated_pair_peaks_agree_with_matched_filter() {
    let (cfg, layout) = setup();
    let a = PointTarget::unit(Vec3::new(-0.06, 0.02, 0.65));
    let b = PointTarget::new(Vec3::new(0.05, -0.03, 0.8), Complex64::new(0.0, 0.8));
    let f = field_for_layout(&[a, b], &layout, &cfg).unwrap();
    let (x, y, z) = (axis(-0.08, 0.01, 17), axis(-0.05, 0.01, 9), axis(0.59, 0.015, 17));
    let s = reconstruct(&f, &x, &y, &z, &StoltOptions::default()).unwrap();
    let m = matched_filter_reconstruct(&f, &x, &y, &z).unwrap();
    let ps: Vec<_> = find_peaks(&s, 0.5).iter().map(|p| p.index).collect();
    let pm: Vec<_> = find_peaks(&m, 0.5).iter().map(|p| p.index).collect();
    assert_eq!(ps.len(), 2, "{ps:?}");
    // argmax voxels may differ by one per axis, as in the acceptance check
    assert_eq!(pm.len(), 2, "{pm:?}");
    for (u, v) in ps.iter().zip(&pm) {
        assert!(u.0.abs_diff(v.0) <= 1 && u.1.abs_diff(v.1) <= 1 && u.2.abs_diff(v.2) <= 1, "{ps:?} vs {pm:?}");
    }
    for (p, t) in ps.iter().zip([a, b]) {
        let q = s.position(p.0, p.1, p.2);
        assert!((q - t.position).abs().iter().zip([0.01, 0.01, 0.015]).all(|(d, step)| *d <= step + 1e-9), "{q} vs {}", t.position);
    }
}

#[test]
fn presets_image_their_reflectors() {
    for (name, n) in [("single_reflector", 1), ("two_reflectors", 2)] {
        for method in [ImagingMethod::Stolt, ImagingMethod::MatchedFilter] {
            let mut cfg = ExperimentConfig::from_preset(name, 1).unwrap();
            cfg.imaging.method = method;
            // keep the matched filter cheap
            cfg.imaging.x = vgradar::experiment::AxisSpec { start: -0.05, step: 0.005, n: 21 };
            cfg.imaging.y = vgradar::experiment::AxisSpec { start: -0.05, step: 0.005, n: 21 };
            cfg.imaging.z = vgradar::experiment::AxisSpec { start: 0.44, step: 0.015, n: 15 };
            let (_, report) = run_image(&cfg).unwrap();
            assert_eq!(report.peaks.len(), n, "{name} {method:?}: {:?}", report.peaks);
            for t in &report.targets {
                let hit = report.peaks.iter().any(|p| {
                    (p.position[0] - t[0]).abs() <= 0.005 + 1e-9 && (p.position[1] - t[1]).abs() <= 0.005 + 1e-9 && (p.position[2] - t[2]).abs() <= 0.015 + 1e-9
                });
                assert!(hit, "{name} {method:?}: no peak near {t:?} in {:?}", report.peaks);
            }
        }
    }
}
