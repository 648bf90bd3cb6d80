//! Region segmentation: planes first (RANSAC), then a curvature-aware
//! K-means over whatever is left, then a connectivity split.

mod euclidean;
mod kmeans;
mod ransac;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cloudio::FeatureCloud;
use crate::error::{Error, Result};
use crate::geometry::{centroid, Vec3};
use crate::spatial::{median_spacing, SpatialIndex};

pub use euclidean::euclidean_split;
pub use kmeans::{angular_similarity, enhanced_kmeans, ClusterCentroid, KmeansOutcome};
pub use ransac::{ransac_plane, ransac_plane_on, Plane, RansacOutcome};

/// Relative weights of the normal and curvature terms in the angular
/// distance. Must be non-negative and sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    pub normal: f64,
    pub curvature: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            normal: 0.6,
            curvature: 0.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationConfig {
    /// Inlier band half-width around a candidate plane (mm).
    pub ransac_distance_threshold: f64,
    pub ransac_iterations: usize,
    /// Planes are extracted while they hold at least this fraction of the
    /// points not yet assigned.
    pub ransac_min_inlier_fraction: f64,
    /// Largest allowed angular distance from a point to its cluster
    /// centroid (radians).
    pub similarity_threshold: f64,
    pub weights: Weights,
    pub max_clusters: usize,
    /// Neighbor radius for the connectivity split (mm). `None` means four
    /// times the median nearest-neighbor spacing of the cloud.
    pub euclidean_split_radius: Option<f64>,
    pub min_region_size: usize,
    pub seed: u64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            ransac_distance_threshold: 0.5,
            ransac_iterations: 1000,
            ransac_min_inlier_fraction: 0.15,
            similarity_threshold: 0.64,
            weights: Weights::default(),
            max_clusters: 32,
            euclidean_split_radius: None,
            min_region_size: 50,
            seed: 0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.similarity_threshold > 0.0) {
            return bad(format!(
                "similarity threshold {} must be > 0",
                self.similarity_threshold
            ));
        }
        let Weights { normal, curvature } = self.weights;
        if normal < 0.0 || curvature < 0.0 || (normal + curvature - 1.0).abs() > 1e-9 {
            return bad(format!(
                "weights ({normal}, {curvature}) must be >= 0 and sum to 1"
            ));
        }
        if !(self.ransac_distance_threshold > 0.0) {
            return bad("RANSAC distance threshold must be > 0".into());
        }
        if !(0.0..=1.0).contains(&self.ransac_min_inlier_fraction) {
            return bad("RANSAC inlier fraction must lie in [0, 1]".into());
        }
        if self.max_clusters < 2 {
            return bad("max_clusters must be >= 2".into());
        }
        if let Some(r) = self.euclidean_split_radius {
            if !(r > 0.0) {
                return bad(format!("euclidean split radius {r} must be > 0"));
            }
        }
        Ok(())
    }
}

/// One segmented region.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: usize,
    /// Sorted indices into the feature cloud.
    pub indices: Vec<usize>,
    pub centroid: Vec3,
    /// Extracted by RANSAC.
    pub is_planar: bool,
    pub plane: Option<Plane>,
    /// Cluster centroid the members were assigned against (K-means regions).
    pub feature_centroid: Option<ClusterCentroid>,
}

impl Region {
    /// Unlabeled, non-planar region over `indices`.
    pub fn new(cloud: &FeatureCloud, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        let c = centroid(indices.iter().map(|&i| &cloud.positions[i]));
        Self {
            label: 0,
            indices,
            centroid: c,
            is_planar: false,
            plane: None,
            feature_centroid: None,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Largest angular distance from a member to the region's cluster
    /// centroid, or `None` for planar regions.
    pub fn max_angular_distance(&self, cloud: &FeatureCloud, weights: Weights) -> Option<f64> {
        let q = self.feature_centroid?;
        Some(
            self.indices
                .iter()
                .map(|&i| {
                    angular_similarity(&cloud.normals[i], cloud.curvature(i), &q, weights)
                        .unwrap_or(f64::INFINITY)
                })
                .fold(0.0, f64::max),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub regions: Vec<Region>,
    /// The K-means stage met its threshold for every cluster (or was not
    /// needed) and every K-means region still satisfies it.
    pub converged: bool,
    pub plane_count: usize,
    pub cluster_count: usize,
    /// Points excluded because their normal was degenerate.
    pub excluded: Vec<usize>,
    /// Points of a clustered fragment smaller than the minimum region size
    /// that had no clustered region to join. They are left unlabeled
    /// because attaching them to a plane would break its inlier band.
    pub residual: Vec<usize>,
}

impl Segmentation {
    /// Per-point region label (`None` for excluded and residual points).
    pub fn labels(&self, n: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n];
        for r in &self.regions {
            for &i in &r.indices {
                out[i] = Some(r.label);
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{} regions ({} planar, {} clustered), converged={}",
            self.regions.len(),
            self.plane_count,
            self.regions.len() - self.plane_count,
            self.converged
        );
        s
    }
}

pub(crate) fn resolve_split_radius(cloud: &FeatureCloud, cfg: &SegmentationConfig) -> f64 {
    cfg.euclidean_split_radius
        .unwrap_or_else(|| 4.0 * median_spacing(&cloud.positions))
        .max(f64::MIN_POSITIVE)
}

/// Full segmentation: repeated plane extraction, K-means on the rest,
/// connectivity split of every cluster. The returned regions partition the
/// non-degenerate points of the cloud, except for a residual fragment below
/// `min_region_size` left over next to planar regions.
pub fn segment(cloud: &FeatureCloud, cfg: &SegmentationConfig) -> Result<Segmentation> {
    cfg.validate()?;
    let usable = cloud.usable_indices();
    let excluded: Vec<usize> = (0..cloud.len())
        .filter(|&i| cloud.flags[i].degenerate_normal)
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut remaining = usable;
    let mut planar = Vec::new();
    while remaining.len() >= 3.max(cfg.min_region_size) {
        let outcome = ransac_plane_on(cloud, &remaining, cfg, &mut rng)?;
        match outcome.fit {
            Some((plane, region)) if region.len() >= cfg.min_region_size => {
                log::debug!(
                    "plane {} with {} inliers ({} left)",
                    planar.len(),
                    region.len(),
                    outcome.remainder.len()
                );
                let mut region = region;
                region.plane = Some(plane);
                planar.push(region);
                remaining = outcome.remainder;
            }
            _ => break,
        }
    }
    let plane_count = planar.len();

    let radius = resolve_split_radius(cloud, cfg);
    let (mut clustered, kmeans_converged, cluster_count) = if remaining.is_empty() {
        (Vec::new(), true, 0)
    } else {
        let out = enhanced_kmeans(cloud, &remaining, cfg, radius)?;
        (out.regions, out.converged, out.cluster_count)
    };

    merge_small_regions(cloud, &mut clustered, cfg.min_region_size);
    let mut residual = Vec::new();
    if !planar.is_empty() && clustered.len() == 1 && clustered[0].len() < cfg.min_region_size {
        residual = clustered.pop().map(|r| r.indices).unwrap_or_default();
        log::debug!("{} residual points left unlabeled", residual.len());
    }

    let converged = kmeans_converged
        && clustered.iter().all(|r| {
            r.max_angular_distance(cloud, cfg.weights)
                .is_none_or(|d| d <= cfg.similarity_threshold)
        });

    let mut regions = planar;
    regions.extend(clustered);
    for (label, r) in regions.iter_mut().enumerate() {
        r.label = label;
    }
    Ok(Segmentation {
        regions,
        converged,
        plane_count,
        cluster_count,
        excluded,
        residual,
    })
}

/// Folds clustered regions below `min_size` into the clustered region that
/// holds their nearest point. A lone small region is kept as is.
fn merge_small_regions(cloud: &FeatureCloud, regions: &mut Vec<Region>, min_size: usize) {
    loop {
        let Some(small) = (0..regions.len())
            .filter(|&r| regions[r].len() < min_size)
            .min_by_key(|&r| (regions[r].len(), regions[r].indices[0]))
        else {
            return;
        };
        if regions.len() < 2 {
            return;
        }
        let others: Vec<usize> = (0..regions.len()).filter(|&r| r != small).collect();
        let mut owner = Vec::new();
        let mut pts = Vec::new();
        for &r in &others {
            for &i in &regions[r].indices {
                owner.push(r);
                pts.push(cloud.positions[i]);
            }
        }
        let index = SpatialIndex::new(&pts);
        let mut best = (f64::INFINITY, others[0]);
        for &i in &regions[small].indices {
            let p = &cloud.positions[i];
            if let Some(&j) = index.nearest(p, 1).first() {
                let d = (pts[j] - p).norm();
                if d < best.0 {
                    best = (d, owner[j]);
                }
            }
        }
        let target = best.1;
        let moved = std::mem::take(&mut regions[small].indices);
        let mut merged = regions[target].indices.clone();
        merged.extend(moved);
        let fc = regions[target].feature_centroid;
        regions[target] = Region::new(cloud, merged);
        regions[target].feature_centroid = fc;
        regions.remove(small);
    }
}
