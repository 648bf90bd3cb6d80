//! Point-cloud ingestion, mesh sampling and per-point surface features.

mod features;
mod io;
mod sampling;

use std::path::PathBuf;

use crate::geometry::Vec3;

pub use features::{
    default_orientation, estimate_curvatures, estimate_features, estimate_normals,
    NormalOrientation, DEFAULT_FEATURE_K,
};
pub use io::{
    load_cloud, load_stl, parse_ply, parse_stl, parse_xyz, save_cloud, write_labeled_ply,
    write_ply, write_stl, write_xyz, CloudFormat,
};
pub use sampling::sample_mesh;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CloudSource {
    pub path: Option<PathBuf>,
    pub sample_count: Option<usize>,
}

/// Raw point positions in millimeters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub source: Option<CloudSource>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            source: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Length of the axis-aligned bounding-box diagonal.
    pub fn bbox_diagonal(&self) -> f64 {
        let Some(first) = self.points.first() else {
            return 0.0;
        };
        let (mut lo, mut hi) = (*first, *first);
        for p in &self.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .sum()
    }

    /// Appends another mesh, re-indexing its triangles.
    pub fn append(&mut self, other: &TriangleMesh) {
        let base = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| t.map(|i| i + base)));
    }
}

/// Per-point quality flags set during feature estimation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PointFlags {
    /// The neighborhood was collinear or coincident; the stored normal is a
    /// placeholder and the point is excluded from segmentation.
    pub degenerate_normal: bool,
    /// The local quadric fit was rank-deficient; curvatures are zero.
    pub low_confidence_curvature: bool,
}

/// Positions with outward unit normals and Gaussian (1/mm^2) and mean
/// (1/mm) curvature per point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureCloud {
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    pub gaussian_curvature: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    pub flags: Vec<PointFlags>,
}

impl FeatureCloud {
    /// Builds a feature cloud from precomputed values, normalizing normals.
    pub fn from_parts(
        positions: Vec<Vec3>,
        normals: Vec<Vec3>,
        gaussian_curvature: Vec<f64>,
        mean_curvature: Vec<f64>,
    ) -> Self {
        let n = positions.len();
        assert_eq!(normals.len(), n);
        assert_eq!(gaussian_curvature.len(), n);
        assert_eq!(mean_curvature.len(), n);
        Self {
            positions,
            normals: normals.into_iter().map(|v| v.normalize()).collect(),
            gaussian_curvature,
            mean_curvature,
            flags: vec![PointFlags::default(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Curvature feature `[K, H]`.
    pub fn curvature(&self, i: usize) -> [f64; 2] {
        [self.gaussian_curvature[i], self.mean_curvature[i]]
    }

    /// Indices of points usable for segmentation.
    pub fn usable_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| !self.flags[i].degenerate_normal)
            .collect()
    }

    pub fn to_point_cloud(&self) -> PointCloud {
        PointCloud::new(self.positions.clone())
    }
}
