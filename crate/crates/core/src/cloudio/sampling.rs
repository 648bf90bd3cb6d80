use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::{CloudSource, PointCloud, TriangleMesh};

/// Draws `count` points uniformly over the mesh surface: a triangle is
/// picked with probability proportional to its area, then a point is drawn
/// uniformly in barycentric coordinates.
pub fn sample_mesh(mesh: &TriangleMesh, count: usize, seed: u64) -> Result<PointCloud> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "sample count must be positive".into(),
        ));
    }
    for tri in &mesh.triangles {
        if tri.iter().any(|&i| i >= mesh.vertices.len()) {
            return Err(Error::InvalidParameter(format!(
                "triangle {tri:?} indexes past {} vertices",
                mesh.vertices.len()
            )));
        }
    }

    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let a = mesh.triangle_area(t);
        if !a.is_finite() {
            return Err(Error::DegenerateMesh);
        }
        total += a;
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::DegenerateMesh);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random::<f64>() * total;
        let t = cumulative
            .partition_point(|&c| c <= target)
            .min(cumulative.len() - 1);
        let [a, b, c] = mesh.triangles[t].map(|i| mesh.vertices[i]);
        let (mut r1, mut r2) = (rng.random::<f64>(), rng.random::<f64>());
        if r1 + r2 > 1.0 {
            r1 = 1.0 - r1;
            r2 = 1.0 - r2;
        }
        let p: Vec3 = a + (b - a) * r1 + (c - a) * r2;
        points.push(p);
    }
    Ok(PointCloud {
        points,
        source: Some(CloudSource {
            path: None,
            sample_count: Some(count),
        }),
    })
}
