use linescan_core::cloudio::{estimate_features, sample_mesh, FeatureCloud, NormalOrientation};
use linescan_core::geometry::Vec3;
use linescan_core::segmentation::{enhanced_kmeans, segment, Region, SegmentationConfig};
use linescan_core::synthetic;

fn patch(origin: Vec3, u: Vec3, v: Vec3, n: usize, step: f64) -> Vec<Vec3> {
    (0..n * n)
        .map(|k| origin + u * ((k % n) as f64 * step) + v * ((k / n) as f64 * step))
        .collect()
}

/// Fraction of points whose region matches ground truth under the best
/// one-to-one label matching (greedy on the confusion matrix, which is
/// exact when each truth class has a dominant region).
fn agreement(regions: &[Region], truth: &[usize], classes: usize) -> f64 {
    let mut confusion = vec![vec![0usize; classes]; regions.len()];
    for (r, region) in regions.iter().enumerate() {
        for &i in &region.indices {
            confusion[r][truth[i]] += 1;
        }
    }
    let mut used_r = vec![false; regions.len()];
    let mut used_c = vec![false; classes];
    let mut matched = 0;
    loop {
        let mut best = None;
        for r in 0..regions.len() {
            for c in 0..classes {
                if !used_r[r] && !used_c[c] && best.is_none_or(|(_, _, v)| confusion[r][c] > v) {
                    best = Some((r, c, confusion[r][c]));
                }
            }
        }
        match best {
            Some((r, c, v)) if v > 0 => {
                used_r[r] = true;
                used_c[c] = true;
                matched += v;
            }
            _ => break,
        }
    }
    matched as f64 / truth.len() as f64
}

#[test]
fn kmeans_two_flat_patches() {
    let mut pts = patch(Vec3::zeros(), Vec3::x(), Vec3::y(), 30, 1.0);
    let mut normals = vec![Vec3::z(); pts.len()];
    pts.extend(patch(
        Vec3::new(130.0, 0.0, 0.0),
        Vec3::y(),
        Vec3::z(),
        30,
        1.0,
    ));
    normals.extend(vec![Vec3::x(); 900]);
    let truth: Vec<usize> = (0..1800).map(|i| i / 900).collect();
    let n = pts.len();
    let cloud = FeatureCloud::from_parts(pts, normals, vec![0.0; n], vec![0.0; n]);
    let idx: Vec<usize> = (0..n).collect();
    for seed in 0..5 {
        let cfg = SegmentationConfig {
            seed,
            ..Default::default()
        };
        let out = enhanced_kmeans(&cloud, &idx, &cfg, 4.0).unwrap();
        assert!(out.converged);
        assert_eq!(out.regions.len(), 2, "seed {seed}");
        assert!(agreement(&out.regions, &truth, 2) >= 0.99);
    }
}

#[test]
fn kmeans_single_flat_patch_collapses() {
    let pts = patch(Vec3::zeros(), Vec3::x(), Vec3::y(), 30, 1.0);
    let n = pts.len();
    let cloud = FeatureCloud::from_parts(pts, vec![Vec3::z(); n], vec![0.0; n], vec![0.0; n]);
    let idx: Vec<usize> = (0..n).collect();
    let out = enhanced_kmeans(&cloud, &idx, &SegmentationConfig::default(), 4.0).unwrap();
    assert!(out.converged);
    assert_eq!(out.regions.len(), 1);
    assert_eq!(out.regions[0].len(), n);
}

#[test]
fn kmeans_splits_spatially_separated_cluster() {
    // same orientation, far apart: one cluster, two connected pieces
    let mut pts = patch(Vec3::zeros(), Vec3::x(), Vec3::y(), 20, 1.0);
    pts.extend(patch(
        Vec3::new(100.0, 0.0, 0.0),
        Vec3::x(),
        Vec3::y(),
        20,
        1.0,
    ));
    let n = pts.len();
    let cloud = FeatureCloud::from_parts(pts, vec![Vec3::z(); n], vec![0.0; n], vec![0.0; n]);
    let idx: Vec<usize> = (0..n).collect();
    let out = enhanced_kmeans(&cloud, &idx, &SegmentationConfig::default(), 5.0).unwrap();
    assert_eq!(out.regions.len(), 2);
    assert_eq!(out.regions[0].indices, (0..400).collect::<Vec<_>>());
}

fn box_features(seed: u64, noise: f64) -> (FeatureCloud, Vec<usize>) {
    let (lx, ly, lz) = (120.0, 80.0, 50.0);
    let mesh = synthetic::open_box_mesh(lx, ly, lz);
    let clean = sample_mesh(&mesh, 10_000, seed).unwrap();
    let truth = clean
        .points
        .iter()
        .map(|p| synthetic::open_box_face(p, lx, ly))
        .collect();
    let cloud = synthetic::jitter(&clean, noise, seed + 1);
    let hint = NormalOrientation::Toward(Vec3::new(lx / 2.0, ly / 2.0, 2000.0));
    (estimate_features(&cloud, 20, hint).unwrap(), truth)
}

#[test]
fn open_box_five_faces() {
    let (fc, truth) = box_features(3, 0.1);
    let seg = segment(&fc, &SegmentationConfig::default()).unwrap();
    assert_eq!(seg.regions.len(), 5, "{}", seg.summary());
    assert!(seg.regions.iter().all(|r| r.is_planar));
    assert!(agreement(&seg.regions, &truth, 5) >= 0.98);
}

#[test]
fn plane_plus_hemisphere() {
    let r = 30.0;
    let base = synthetic::random_plane((-80.0, 80.0), (-80.0, 80.0), 5000, Vec3::zeros(), r, 1);
    let dome = synthetic::hemisphere(Vec3::zeros(), r, 4000, 2);
    let mut pts = base.points;
    pts.extend(dome.points);
    let cloud = linescan_core::cloudio::PointCloud::new(pts);
    let fc = estimate_features(
        &cloud,
        20,
        NormalOrientation::AwayFrom(Vec3::new(0.0, 0.0, -1.0)),
    )
    .unwrap();
    let seg = segment(&fc, &SegmentationConfig::default()).unwrap();
    assert!(seg.regions.len() >= 2, "{}", seg.summary());
    assert!(seg.regions[0].is_planar);
    let plane = seg.regions[0].plane.unwrap();
    assert!(plane.normal.z > 0.9999);
    // the dome is not planar; most of it should be in clustered regions
    let clustered: usize = seg
        .regions
        .iter()
        .filter(|r| !r.is_planar)
        .map(|r| r.len())
        .sum();
    assert!(clustered > 3500, "{clustered}");
    // regions plus residual partition the usable points
    let mut seen = vec![0u8; fc.len()];
    for r in &seg.regions {
        for &i in &r.indices {
            seen[i] += 1;
        }
    }
    assert!(seg.residual.len() < SegmentationConfig::default().min_region_size);
    for &i in &seg.residual {
        seen[i] += 1;
    }
    for (i, &count) in seen.iter().enumerate() {
        let want = if fc.flags[i].degenerate_normal { 0 } else { 1 };
        assert_eq!(count, want);
    }
}

#[test]
fn segmentation_is_deterministic() {
    let (fc, _) = box_features(9, 0.1);
    let cfg = SegmentationConfig {
        seed: 11,
        ..Default::default()
    };
    assert_eq!(segment(&fc, &cfg).unwrap(), segment(&fc, &cfg).unwrap());
}
