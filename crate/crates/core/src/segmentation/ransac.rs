use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloudio::FeatureCloud;
use crate::error::{Error, Result};
use crate::geometry::{covariance, sorted_eigen, Vec3};

use super::{Region, SegmentationConfig};

/// Plane `a x + b y + c z + d = 0` with `(a, b, c)` of unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Vec3,
    pub offset: f64,
}

impl Plane {
    pub fn coefficients(&self) -> [f64; 4] {
        [self.normal.x, self.normal.y, self.normal.z, self.offset]
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    /// Plane through three points; `None` if they are (nearly) collinear.
    pub fn through(a: &Vec3, b: &Vec3, c: &Vec3) -> Option<Self> {
        let n = (b - a).cross(&(c - a));
        let scale = (b - a).norm_squared().max((c - a).norm_squared());
        if !(n.norm_squared() > 1e-18 * scale * scale) {
            return None;
        }
        let normal = n.normalize();
        Some(Self {
            normal,
            offset: -normal.dot(a),
        })
    }

    /// Total least-squares plane through a point set.
    pub fn fit<'a>(points: impl IntoIterator<Item = &'a Vec3> + Clone) -> Option<Self> {
        let (c, cov) = covariance(points);
        let eig = sorted_eigen(&cov);
        if !(eig.values[1] > 0.0) {
            return None;
        }
        let normal = eig.vectors[0];
        Some(Self {
            normal,
            offset: -normal.dot(&c),
        })
    }

    fn flipped(self) -> Self {
        Self {
            normal: -self.normal,
            offset: -self.offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacOutcome {
    /// Best plane and its inliers, or `None` if no plane reached the
    /// minimum inlier fraction.
    pub fit: Option<(Plane, Region)>,
    /// Candidate indices not in the inlier set, ascending.
    pub remainder: Vec<usize>,
}

/// RANSAC plane over all non-degenerate points of the cloud, seeded from
/// `cfg.seed`.
pub fn ransac_plane(cloud: &FeatureCloud, cfg: &SegmentationConfig) -> Result<RansacOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    ransac_plane_on(cloud, &cloud.usable_indices(), cfg, &mut rng)
}

fn inliers_of(
    cloud: &FeatureCloud,
    candidates: &[usize],
    plane: &Plane,
    threshold: f64,
) -> Vec<usize> {
    candidates
        .iter()
        .copied()
        .filter(|&i| plane.signed_distance(&cloud.positions[i]).abs() <= threshold)
        .collect()
}

/// RANSAC plane over a subset of the cloud. Hypotheses come from random
/// 3-point samples; the one with the most inliers is refit by least squares
/// and its inlier set recomputed. The plane normal is oriented to agree with
/// the inliers' mean normal.
pub fn ransac_plane_on(
    cloud: &FeatureCloud,
    candidates: &[usize],
    cfg: &SegmentationConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RansacOutcome> {
    let n = candidates.len();
    if n < 3 {
        return Err(Error::InsufficientPoints {
            required: 3,
            actual: n,
        });
    }
    let thr = cfg.ransac_distance_threshold;

    let mut best: Option<(Plane, usize)> = None;
    for _ in 0..cfg.ransac_iterations {
        let a = rng.random_range(0..n);
        let mut b = rng.random_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let mut c = rng.random_range(0..n - 2);
        for taken in [a.min(b), a.max(b)] {
            if c >= taken {
                c += 1;
            }
        }
        let [pa, pb, pc] = [a, b, c].map(|k| &cloud.positions[candidates[k]]);
        let Some(plane) = Plane::through(pa, pb, pc) else {
            continue;
        };
        let count = candidates
            .iter()
            .filter(|&&i| plane.signed_distance(&cloud.positions[i]).abs() <= thr)
            .count();
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((plane, count));
        }
    }

    let Some((raw, _)) = best else {
        return Ok(RansacOutcome {
            fit: None,
            remainder: candidates.to_vec(),
        });
    };
    let raw_inliers = inliers_of(cloud, candidates, &raw, thr);
    let (mut plane, inliers) = match Plane::fit(raw_inliers.iter().map(|&i| &cloud.positions[i])) {
        Some(refit) => {
            let refit_inliers = inliers_of(cloud, candidates, &refit, thr);
            if refit_inliers.len() >= raw_inliers.len() {
                (refit, refit_inliers)
            } else {
                (raw, raw_inliers)
            }
        }
        None => (raw, raw_inliers),
    };

    if (inliers.len() as f64) < cfg.ransac_min_inlier_fraction * n as f64 {
        return Ok(RansacOutcome {
            fit: None,
            remainder: candidates.to_vec(),
        });
    }

    let mean_normal: Vec3 = inliers.iter().map(|&i| cloud.normals[i]).sum();
    if mean_normal.dot(&plane.normal) < 0.0 {
        plane = plane.flipped();
    }

    let mut is_inlier = vec![false; cloud.len()];
    for &i in &inliers {
        is_inlier[i] = true;
    }
    let remainder = candidates
        .iter()
        .copied()
        .filter(|&i| !is_inlier[i])
        .collect();
    let mut region = Region::new(cloud, inliers);
    region.is_planar = true;
    region.plane = Some(plane);
    Ok(RansacOutcome {
        fit: Some((plane, region)),
        remainder,
    })
}
