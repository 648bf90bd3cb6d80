use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{any_orthogonal, covariance, sorted_eigen, Vec3};
use crate::spatial::SpatialIndex;

use super::{FeatureCloud, PointCloud, PointFlags};

pub const DEFAULT_FEATURE_K: usize = 20;

/// Middle-to-largest eigenvalue ratio below which a neighborhood counts as
/// collinear (or coincident).
const COLLINEAR_RATIO: f64 = 1e-10;
/// Smallest-to-largest singular value ratio below which the quadric fit is
/// treated as rank-deficient.
const QUADRIC_RANK_RATIO: f64 = 1e-8;

/// How the sign of each PCA normal is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormalOrientation {
    /// Normals point toward this location (a sensor-side viewpoint).
    Toward(Vec3),
    /// Normals point away from this location, e.g. the center of a closed part.
    AwayFrom(Vec3),
}

impl NormalOrientation {
    fn orient(&self, p: &Vec3, n: Vec3) -> Vec3 {
        let facing = match self {
            NormalOrientation::Toward(h) => n.dot(&(h - p)),
            NormalOrientation::AwayFrom(h) => n.dot(&(p - h)),
        };
        if facing < 0.0 {
            -n
        } else {
            n
        }
    }

    fn fallback(&self, p: &Vec3) -> Vec3 {
        let d = match self {
            NormalOrientation::Toward(h) => h - p,
            NormalOrientation::AwayFrom(h) => p - h,
        };
        if d.norm() > 0.0 {
            d.normalize()
        } else {
            Vec3::z()
        }
    }
}

/// Sensor-side hint well above the part: centroid + (0, 0, 10 * bbox diagonal).
pub fn default_orientation(cloud: &PointCloud) -> NormalOrientation {
    let c = crate::geometry::centroid(&cloud.points);
    NormalOrientation::Toward(c + Vec3::new(0.0, 0.0, 10.0 * cloud.bbox_diagonal().max(1.0)))
}

/// PCA normals over each point and its `k` nearest neighbors. Points whose
/// neighborhood is collinear get a placeholder normal and are flagged
/// `degenerate_normal`. Curvatures are left at zero.
pub fn estimate_normals(
    cloud: &PointCloud,
    k: usize,
    orientation: NormalOrientation,
) -> Result<FeatureCloud> {
    if k < 3 {
        return Err(Error::InvalidParameter(format!(
            "normal neighborhood k={k} < 3"
        )));
    }
    if cloud.len() < k + 1 {
        return Err(Error::InsufficientPoints {
            required: k + 1,
            actual: cloud.len(),
        });
    }
    let index = SpatialIndex::new(&cloud.points);
    let results: Vec<(Vec3, bool)> = cloud
        .points
        .par_iter()
        .map(|p| {
            let nbrs = index.nearest(p, k + 1);
            let (_, cov) = covariance(nbrs.iter().map(|&j| &cloud.points[j]));
            let eig = sorted_eigen(&cov);
            let scale = eig.values[2];
            if !(scale > 0.0) || eig.values[1] <= COLLINEAR_RATIO * scale {
                return (orientation.fallback(p), true);
            }
            (orientation.orient(p, eig.vectors[0]), false)
        })
        .collect();

    let n = cloud.len();
    let mut out = FeatureCloud {
        positions: cloud.points.clone(),
        normals: Vec::with_capacity(n),
        gaussian_curvature: vec![0.0; n],
        mean_curvature: vec![0.0; n],
        flags: vec![PointFlags::default(); n],
    };
    for (i, (normal, degenerate)) in results.into_iter().enumerate() {
        out.normals.push(normal);
        out.flags[i].degenerate_normal = degenerate;
    }
    Ok(out)
}

/// Principal-curvature summary from a local height-field fit
/// `h = a x^2 + b xy + c y^2 + d x + e y + f` in the tangent frame of each
/// point. Returns `None` when the fit is rank-deficient.
fn quadric_curvature(center: &Vec3, normal: &Vec3, neighbors: &[Vec3]) -> Option<(f64, f64)> {
    let u = any_orthogonal(normal);
    let v = normal.cross(&u);
    let local: Vec<(f64, f64, f64)> = neighbors
        .iter()
        .map(|q| {
            let d = q - center;
            (d.dot(&u), d.dot(&v), d.dot(normal))
        })
        .collect();
    let scale = local
        .iter()
        .map(|(x, y, _)| x.hypot(*y))
        .fold(0.0, f64::max);
    if !(scale > 0.0) {
        return None;
    }

    let mut normal_matrix = Matrix6::<f64>::zeros();
    let mut rhs = Vector6::<f64>::zeros();
    for (x, y, h) in &local {
        let (x, y) = (x / scale, y / scale);
        let row = Vector6::new(x * x, x * y, y * y, x, y, 1.0);
        normal_matrix += row * row.transpose();
        rhs += row * (h / scale);
    }
    let svd = normal_matrix.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    // singular values of the normal matrix are squares of the design matrix's
    if !(smax > 0.0) || smin <= QUADRIC_RANK_RATIO * QUADRIC_RANK_RATIO * smax {
        return None;
    }
    let coef = svd.solve(&rhs, 0.0).ok()?;

    let fxx = 2.0 * coef[0] / scale;
    let fxy = coef[1] / scale;
    let fyy = 2.0 * coef[2] / scale;
    let fx = coef[3];
    let fy = coef[4];
    let w = 1.0 + fx * fx + fy * fy;
    let gaussian = (fxx * fyy - fxy * fxy) / (w * w);
    let graph_mean =
        ((1.0 + fy * fy) * fxx - 2.0 * fx * fy * fxy + (1.0 + fx * fx) * fyy) / (2.0 * w.powf(1.5));
    // The height axis is the outward normal, so a surface bulging toward it
    // bends downward in the local frame: flip to make convex-outward positive.
    let mean = -graph_mean;
    (gaussian.is_finite() && mean.is_finite()).then_some((gaussian, mean))
}

/// Fills Gaussian and mean curvature from a quadric fit over each point's
/// `k` nearest neighbors. Rank-deficient fits leave zeros and set
/// `low_confidence_curvature`.
pub fn estimate_curvatures(cloud: &FeatureCloud, k: usize) -> Result<FeatureCloud> {
    if k < 6 {
        return Err(Error::InvalidParameter(format!(
            "curvature neighborhood k={k} < 6"
        )));
    }
    if cloud.len() < k + 1 {
        return Err(Error::InsufficientPoints {
            required: k + 1,
            actual: cloud.len(),
        });
    }
    let index = SpatialIndex::new(&cloud.positions);
    let fits: Vec<Option<(f64, f64)>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            if cloud.flags[i].degenerate_normal {
                return None;
            }
            let p = &cloud.positions[i];
            let nbrs: Vec<Vec3> = index
                .nearest(p, k + 1)
                .into_iter()
                .map(|j| cloud.positions[j])
                .collect();
            quadric_curvature(p, &cloud.normals[i], &nbrs)
        })
        .collect();

    let mut out = cloud.clone();
    for (i, fit) in fits.into_iter().enumerate() {
        match fit {
            Some((kg, hm)) => {
                out.gaussian_curvature[i] = kg;
                out.mean_curvature[i] = hm;
                out.flags[i].low_confidence_curvature = false;
            }
            None => {
                out.gaussian_curvature[i] = 0.0;
                out.mean_curvature[i] = 0.0;
                out.flags[i].low_confidence_curvature = true;
            }
        }
    }
    Ok(out)
}

/// Normals followed by curvatures, with the same neighborhood size.
pub fn estimate_features(
    cloud: &PointCloud,
    k: usize,
    orientation: NormalOrientation,
) -> Result<FeatureCloud> {
    let with_normals = estimate_normals(cloud, k, orientation)?;
    estimate_curvatures(&with_normals, k)
}
