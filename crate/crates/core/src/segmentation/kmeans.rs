use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cloudio::FeatureCloud;
use crate::error::{Error, Result};
use crate::geometry::{angle_between, Vec3};

use super::{euclidean_split, Region, SegmentationConfig, Weights};

const INNER_ITERATION_CAP: usize = 100;
/// Curvature vectors shorter than this count as flat.
const FLAT_CURVATURE: f64 = 1e-9;
const KMEANS_STREAM: u64 = 0x6b6d_6561_6e73;

/// Cluster prototype: unit normal direction and unit curvature direction
/// in the `[K, H]` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterCentroid {
    pub normal: Vec3,
    pub curvature: [f64; 2],
}

impl ClusterCentroid {
    /// Normalizes both parts. A zero curvature vector becomes `[0, 1]`.
    pub fn new(normal: Vec3, curvature: [f64; 2]) -> Self {
        Self {
            normal: normal.normalize(),
            curvature: unit2(curvature).unwrap_or([0.0, 1.0]),
        }
    }
}

fn unit2(c: [f64; 2]) -> Option<[f64; 2]> {
    let n = c[0].hypot(c[1]);
    (n >= FLAT_CURVATURE && n.is_finite()).then(|| [c[0] / n, c[1] / n])
}

/// Weighted angular distance between a point feature `(n, c)` and a
/// centroid: `w_n * acos(n.q_n) + w_c * acos(c.q_c)` on normalized
/// vectors. A flat point (|c| below 1e-9) contributes no curvature term.
/// Smaller means more similar.
pub fn angular_similarity(
    normal: &Vec3,
    curvature: [f64; 2],
    centroid: &ClusterCentroid,
    weights: Weights,
) -> Result<f64> {
    let len = normal.norm();
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::InvalidFeature(format!(
            "normal {normal:?} has no direction"
        )));
    }
    let normal_term = (normal.dot(&centroid.normal) / len).clamp(-1.0, 1.0).acos();
    let curvature_term = match unit2(curvature) {
        Some(c) => (c[0] * centroid.curvature[0] + c[1] * centroid.curvature[1])
            .clamp(-1.0, 1.0)
            .acos(),
        None => 0.0,
    };
    Ok(weights.normal * normal_term + weights.curvature * curvature_term)
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansOutcome {
    pub regions: Vec<Region>,
    /// Every cluster's largest member distance was within the threshold.
    pub converged: bool,
    /// Cluster count of the returned partition.
    pub cluster_count: usize,
    pub centroids: Vec<ClusterCentroid>,
}

struct Partition {
    clusters: usize,
    assignment: Vec<usize>,
    centroids: Vec<ClusterCentroid>,
    satisfied: usize,
    worst: f64,
}

impl Partition {
    /// Higher satisfied fraction first, then smaller worst distance.
    fn better_than(&self, other: &Partition) -> bool {
        let a = self.satisfied as f64 / self.clusters as f64;
        let b = other.satisfied as f64 / other.clusters as f64;
        a > b || (a == b && self.worst < other.worst)
    }
}

type Feature = (Vec3, [f64; 2]);

fn assign(features: &[Feature], centroids: &[ClusterCentroid], w: Weights) -> Vec<(usize, f64)> {
    features
        .par_iter()
        .map(|(n, c)| {
            let mut best = (0, f64::INFINITY);
            for (j, q) in centroids.iter().enumerate() {
                // normals were validated up front
                let a = angular_similarity(n, *c, q, w).unwrap_or(f64::INFINITY);
                if a < best.1 {
                    best = (j, a);
                }
            }
            best
        })
        .collect()
}

fn seed_centroids(
    features: &[Feature],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<ClusterCentroid> {
    let m = features.len();
    let mut chosen = vec![rng.random_range(0..m)];
    let mut nearest: Vec<f64> = features
        .iter()
        .map(|(n, _)| angle_between(n, &features[chosen[0]].0))
        .collect();
    while chosen.len() < count {
        let total: f64 = nearest.iter().map(|d| d * d).sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = m - 1;
            for (i, d) in nearest.iter().enumerate() {
                target -= d * d;
                if target < 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..m)
        };
        chosen.push(next);
        for (i, (n, _)) in features.iter().enumerate() {
            nearest[i] = nearest[i].min(angle_between(n, &features[next].0));
        }
    }
    chosen
        .into_iter()
        .map(|i| ClusterCentroid::new(features[i].0, features[i].1))
        .collect()
}

fn update_centroids(features: &[Feature], assignment: &[usize], centroids: &mut [ClusterCentroid]) {
    let k = centroids.len();
    let mut n_sum = vec![Vec3::zeros(); k];
    let mut c_sum = vec![[0.0f64; 2]; k];
    let mut count = vec![0usize; k];
    for ((n, c), &j) in features.iter().zip(assignment) {
        n_sum[j] += n.normalize();
        c_sum[j][0] += c[0];
        c_sum[j][1] += c[1];
        count[j] += 1;
    }
    for j in 0..k {
        if count[j] == 0 {
            continue;
        }
        let inv = 1.0 / count[j] as f64;
        let mean_n = n_sum[j] * inv;
        if mean_n.norm() > 1e-12 {
            centroids[j].normal = mean_n.normalize();
        }
        if let Some(c) = unit2([c_sum[j][0] * inv, c_sum[j][1] * inv]) {
            centroids[j].curvature = c;
        }
    }
}

/// Curvature-aware K-means with automatic cluster count.
///
/// Starting from two clusters, each outer round reseeds the centroids and
/// runs assignment/update sweeps. A sweep assigns every point to the
/// centroid at the smallest angular distance (lowest label on ties) and
/// counts the clusters whose largest member distance is within
/// `cfg.similarity_threshold`. When all clusters qualify the search stops.
/// When the count drops below the previous sweep's, or the assignment stops
/// changing, or 100 sweeps pass, the cluster count grows by one. Past
/// `cfg.max_clusters` the best partition seen is returned unconverged.
///
/// Every cluster is then split into spatially connected pieces with
/// [`euclidean_split`] using `split_radius`.
pub fn enhanced_kmeans(
    cloud: &FeatureCloud,
    indices: &[usize],
    cfg: &SegmentationConfig,
    split_radius: f64,
) -> Result<KmeansOutcome> {
    cfg.validate()?;
    if indices.is_empty() {
        return Ok(KmeansOutcome {
            regions: Vec::new(),
            converged: true,
            cluster_count: 0,
            centroids: Vec::new(),
        });
    }
    let features: Vec<Feature> = indices
        .iter()
        .map(|&i| (cloud.normals[i], cloud.curvature(i)))
        .collect();
    for (i, (n, _)) in indices.iter().zip(&features) {
        if !(n.norm() > 0.0) {
            return Err(Error::InvalidFeature(format!(
                "point {i} has a zero normal"
            )));
        }
    }
    let threshold = cfg.similarity_threshold;
    let w = cfg.weights;
    let m = features.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ KMEANS_STREAM);

    let mut best: Option<Partition> = None;
    let mut converged = false;
    let max_clusters = cfg.max_clusters.min(m.max(2));

    'outer: for clusters in 2..=max_clusters {
        let mut centroids = seed_centroids(&features, clusters.min(m), &mut rng);
        centroids.resize(clusters, centroids[0]);
        let mut previous_beta: isize = -1;
        let mut previous_assignment: Option<Vec<usize>> = None;

        for _ in 0..INNER_ITERATION_CAP {
            let scored = assign(&features, &centroids, w);
            let assignment: Vec<usize> = scored.iter().map(|s| s.0).collect();
            let mut worst_per_cluster = vec![0.0f64; clusters];
            for &(j, a) in &scored {
                worst_per_cluster[j] = worst_per_cluster[j].max(a);
            }
            let beta = worst_per_cluster
                .iter()
                .filter(|&&d| d <= threshold)
                .count();
            let worst = worst_per_cluster.iter().copied().fold(0.0, f64::max);

            let candidate = Partition {
                clusters,
                assignment: assignment.clone(),
                centroids: centroids.clone(),
                satisfied: beta,
                worst,
            };
            if best.as_ref().is_none_or(|b| candidate.better_than(b)) {
                best = Some(candidate);
            }
            if beta == clusters {
                converged = true;
                break 'outer;
            }
            if (beta as isize) < previous_beta || previous_assignment.as_ref() == Some(&assignment)
            {
                break;
            }
            previous_beta = beta as isize;
            update_centroids(&features, &assignment, &mut centroids);
            previous_assignment = Some(assignment);
        }
        log::trace!("k-means: N={clusters} did not meet the threshold");
    }

    let best = best.expect("at least one sweep ran");
    if !converged {
        log::warn!(
            "k-means did not converge within {} clusters; worst distance {:.3} rad",
            cfg.max_clusters,
            best.worst
        );
    }

    let mut members = vec![Vec::new(); best.clusters];
    for (&i, &j) in indices.iter().zip(&best.assignment) {
        members[j].push(i);
    }
    let mut regions = Vec::new();
    for (j, idx) in members.into_iter().enumerate() {
        if idx.is_empty() {
            continue;
        }
        let region = Region::new(cloud, idx);
        for mut piece in euclidean_split(&region, cloud, split_radius, cfg.min_region_size) {
            piece.feature_centroid = Some(best.centroids[j]);
            regions.push(piece);
        }
    }
    Ok(KmeansOutcome {
        regions,
        converged,
        cluster_count: best.clusters,
        centroids: best.centroids,
    })
}
