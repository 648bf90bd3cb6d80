//! Estimated curvature against closed-form values for a sphere and a
//! cylinder: sphere K = 1/r^2, H = 1/r; cylinder K = 0, H = 1/(2r).

use std::f64::consts::PI;

use linescan_core::cloudio::{estimate_features, NormalOrientation};
use linescan_core::geometry::Vec3;
use linescan_core::synthetic;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

#[test]
fn sphere_radius_50() {
    let r = 50.0;
    let cloud = synthetic::fibonacci_sphere(r, 20_000);
    let fc = estimate_features(&cloud, 20, NormalOrientation::AwayFrom(Vec3::zeros())).unwrap();
    let (k_true, h_true) = (1.0 / (r * r), 1.0 / r);
    let mut worst_k: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for i in 0..fc.len() {
        worst_k = worst_k.max((fc.gaussian_curvature[i] - k_true).abs() / k_true);
        worst_h = worst_h.max((fc.mean_curvature[i] - h_true).abs() / h_true);
    }
    assert!(worst_k <= 0.10, "worst relative K error {worst_k}");
    assert!(worst_h <= 0.10, "worst relative H error {worst_h}");
}

#[test]
fn cylinder_radius_25() {
    let r = 25.0;
    let cloud = synthetic::cylinder(r, 100.0, 0.8, 2.0 * PI);
    let fc = estimate_features(
        &cloud,
        20,
        NormalOrientation::AwayFrom(Vec3::new(0.0, 0.0, 50.0)),
    )
    .unwrap();
    // Skip the two open rims, where the neighborhood is one-sided along z.
    let interior: Vec<usize> = (0..fc.len())
        .filter(|&i| (5.0..95.0).contains(&fc.positions[i].z))
        .collect();
    let k_scale = 1.0 / (r * r);
    let h_true = 1.0 / (2.0 * r);
    for &i in &interior {
        let k = fc.gaussian_curvature[i];
        let h = fc.mean_curvature[i];
        assert!(k.abs() <= 0.10 * k_scale, "point {i}: K = {k}");
        assert!((h - h_true).abs() <= 0.10 * h_true, "point {i}: H = {h}");
    }
    let hs: Vec<f64> = interior.iter().map(|&i| fc.mean_curvature[i]).collect();
    assert!((median(hs) - h_true).abs() < 0.02 * h_true);
}

#[test]
fn inward_orientation_flips_mean_curvature_sign() {
    let cloud = synthetic::fibonacci_sphere(50.0, 8000);
    let fc = estimate_features(&cloud, 20, NormalOrientation::Toward(Vec3::zeros())).unwrap();
    assert!(fc.mean_curvature.iter().all(|&h| h < 0.0));
    assert!(fc.gaussian_curvature.iter().all(|&k| k > 0.0));
}
