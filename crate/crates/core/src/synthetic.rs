//! Synthetic parts with known geometry, used by the test suites, the
//! acceptance harness and the fuzz corpus.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cloudio::{PointCloud, TriangleMesh};
use crate::geometry::Vec3;

/// Regular grid on z = 0 covering `[0, width] x [0, height]`.
pub fn grid_plane(width: f64, height: f64, spacing: f64) -> PointCloud {
    let nx = (width / spacing).round() as usize;
    let ny = (height / spacing).round() as usize;
    let mut pts = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            pts.push(Vec3::new(i as f64 * spacing, j as f64 * spacing, 0.0));
        }
    }
    PointCloud::new(pts)
}

/// Near-uniform points on a sphere centered at the origin.
pub fn fibonacci_sphere(radius: f64, count: usize) -> PointCloud {
    let golden = PI * (3.0 - 5f64.sqrt());
    let pts = (0..count)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
            let r = (1.0 - z * z).sqrt();
            let theta = golden * i as f64;
            Vec3::new(r * theta.cos(), r * theta.sin(), z) * radius
        })
        .collect();
    PointCloud::new(pts)
}

/// Lateral surface of a cylinder around the z axis, `z in [0, length]`,
/// sampled on a staggered grid with roughly `spacing` between points.
pub fn cylinder(radius: f64, length: f64, spacing: f64, arc: f64) -> PointCloud {
    let n_theta = ((radius * arc) / spacing).round().max(2.0) as usize;
    let n_z = (length / spacing).round().max(1.0) as usize;
    let full = (arc - 2.0 * PI).abs() < 1e-12;
    let mut pts = Vec::new();
    for j in 0..=n_z {
        let z = j as f64 * length / n_z as f64;
        let offset = if j % 2 == 1 { 0.5 } else { 0.0 };
        let steps = if full { n_theta } else { n_theta + 1 };
        for i in 0..steps {
            let mut t = (i as f64 + if full { offset } else { 0.0 }) * arc / n_theta as f64;
            if !full {
                t = t.min(arc);
            }
            pts.push(Vec3::new(radius * t.cos(), radius * t.sin(), z));
        }
    }
    PointCloud::new(pts)
}

/// Isotropic Gaussian jitter with standard deviation `sigma` (mm).
pub fn jitter(cloud: &PointCloud, sigma: f64, seed: u64) -> PointCloud {
    if sigma == 0.0 {
        return cloud.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let pts = cloud
        .points
        .iter()
        .map(|p| {
            p + Vec3::new(
                normal.sample(&mut rng),
                normal.sample(&mut rng),
                normal.sample(&mut rng),
            )
        })
        .collect();
    PointCloud::new(pts)
}

fn quad(mesh: &mut TriangleMesh, corners: [Vec3; 4]) {
    let base = mesh.vertices.len();
    mesh.vertices.extend_from_slice(&corners);
    mesh.triangles.push([base, base + 1, base + 2]);
    mesh.triangles.push([base, base + 2, base + 3]);
}

/// Rectangular plate on z = 0 covering `[0, width] x [0, height]`.
pub fn plate_mesh(width: f64, height: f64) -> TriangleMesh {
    let mut m = TriangleMesh::default();
    quad(
        &mut m,
        [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(width, 0.0, 0.0),
            Vec3::new(width, height, 0.0),
            Vec3::new(0.0, height, 0.0),
        ],
    );
    m
}

/// Box `[0, lx] x [0, ly] x [0, lz]` without its top face: a bottom and
/// four walls, 10 triangles.
pub fn open_box_mesh(lx: f64, ly: f64, lz: f64) -> TriangleMesh {
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
    let mut m = TriangleMesh::default();
    quad(
        &mut m,
        [v(0., 0., 0.), v(lx, 0., 0.), v(lx, ly, 0.), v(0., ly, 0.)],
    );
    quad(
        &mut m,
        [v(0., 0., 0.), v(0., ly, 0.), v(0., ly, lz), v(0., 0., lz)],
    );
    quad(
        &mut m,
        [v(lx, 0., 0.), v(lx, ly, 0.), v(lx, ly, lz), v(lx, 0., lz)],
    );
    quad(
        &mut m,
        [v(0., 0., 0.), v(lx, 0., 0.), v(lx, 0., lz), v(0., 0., lz)],
    );
    quad(
        &mut m,
        [v(0., ly, 0.), v(lx, ly, 0.), v(lx, ly, lz), v(0., ly, lz)],
    );
    m
}

/// Ground-truth face of a point sampled from [`open_box_mesh`]: 0 bottom,
/// 1 x = 0, 2 x = lx, 3 y = 0, 4 y = ly. Picks the nearest face plane.
pub fn open_box_face(p: &Vec3, lx: f64, ly: f64) -> usize {
    let d = [
        p.z.abs(),
        p.x.abs(),
        (p.x - lx).abs(),
        p.y.abs(),
        (p.y - ly).abs(),
    ];
    (0..5).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap()
}

/// Hemisphere of `radius` (z >= 0) centered at `center`, sampled uniformly
/// at random with `count` points.
pub fn hemisphere(center: Vec3, radius: f64, count: usize, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..count)
        .map(|_| {
            let z: f64 = rng.random::<f64>();
            let phi = rng.random::<f64>() * 2.0 * PI;
            let r = (1.0 - z * z).sqrt();
            center + Vec3::new(r * phi.cos(), r * phi.sin(), z) * radius
        })
        .collect();
    PointCloud::new(pts)
}

/// Uniform random samples on the z = 0 rectangle `[x0, x1] x [y0, y1]`,
/// skipping the disc of `hole_radius` around `hole_center` (set the radius
/// to zero for no hole).
pub fn random_plane(
    x: (f64, f64),
    y: (f64, f64),
    count: usize,
    hole_center: Vec3,
    hole_radius: f64,
    seed: u64,
) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(count);
    while pts.len() < count {
        let p = Vec3::new(rng.random_range(x.0..x.1), rng.random_range(y.0..y.1), 0.0);
        let d = (p - hole_center).xy().norm();
        if d >= hole_radius {
            pts.push(p);
        }
    }
    PointCloud::new(pts)
}

/// Curved test parts with an optional flat base, chosen by `seed`: a plane
/// with a hemispherical dome, a half-cylinder shell, or a saddle-free
/// spherical cap. Returns the cloud and a hint for outward normal
/// orientation.
pub fn curved_part(seed: u64) -> (PointCloud, crate::cloudio::NormalOrientation) {
    use crate::cloudio::NormalOrientation;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0fc0_ffee);
    match seed % 3 {
        0 => {
            let r = rng.random_range(25.0..45.0);
            let half = r + rng.random_range(30.0..60.0);
            let base = random_plane((-half, half), (-half, half), 3000, Vec3::zeros(), r, seed);
            let dome = hemisphere(Vec3::zeros(), r, 3000, seed + 1);
            let mut pts = base.points;
            pts.extend(dome.points);
            (
                PointCloud::new(pts),
                NormalOrientation::AwayFrom(Vec3::new(0.0, 0.0, -1.0)),
            )
        }
        1 => {
            let r = rng.random_range(45.0..70.0);
            let len = rng.random_range(60.0..120.0);
            let shell = cylinder(r, len, 1.5, PI);
            (shell, NormalOrientation::AwayFrom(Vec3::new(0.0, 0.0, 0.0)))
        }
        _ => {
            let r: f64 = rng.random_range(40.0..80.0);
            let cap: f64 = rng.random_range(0.5..1.2);
            let n = 4000;
            let mut pts = Vec::with_capacity(n);
            while pts.len() < n {
                let z: f64 = rng.random_range(cap.cos()..1.0);
                let phi = rng.random::<f64>() * 2.0 * PI;
                let s = (1.0_f64 - z * z).sqrt();
                pts.push(Vec3::new(s * phi.cos(), s * phi.sin(), z) * r);
            }
            (
                PointCloud::new(pts),
                NormalOrientation::AwayFrom(Vec3::zeros()),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_has_five_faces() {
        let m = open_box_mesh(100.0, 80.0, 50.0);
        assert_eq!(m.triangles.len(), 10);
        let want = 100.0 * 80.0 + 2.0 * (100.0 * 50.0 + 80.0 * 50.0);
        assert!((m.total_area() - want).abs() < 1e-9);
    }

    #[test]
    fn sphere_points_on_radius() {
        let c = fibonacci_sphere(50.0, 100);
        assert!(c.points.iter().all(|p| (p.norm() - 50.0).abs() < 1e-9));
    }

    #[test]
    fn cylinder_points_on_radius() {
        let c = cylinder(25.0, 40.0, 2.0, 2.0 * PI);
        assert!(c.points.iter().all(|p| (p.xy().norm() - 25.0).abs() < 1e-9));
    }
}
