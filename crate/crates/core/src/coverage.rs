//! Plan verification: the volume a line scanner sees while moving in a
//! straight line is a box (scan length x line width x in-focus depth band).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::localpath::{LocalPath, ScannerModel};

/// Slack (mm) on every box face. Aim points sit exactly on faces, and a plan
/// read back from its six-decimal file carries about 1e-4 mm of drift at
/// the standoff distance.
const FACE_SLACK: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweptCuboid {
    pub origin: Vec3,
    /// Scan (motion) axis.
    pub scan_axis: Vec3,
    /// View axis, from the sensor toward the surface.
    pub depth_axis: Vec3,
    /// `scan_axis x depth_axis`.
    pub lateral_axis: Vec3,
    pub scan_length: f64,
    pub width: f64,
    pub depth_min: f64,
    pub depth_max: f64,
}

impl SweptCuboid {
    /// Box swept by the sensor from the path's start to its end viewpoint.
    pub fn from_path(path: &LocalPath, scanner: &ScannerModel) -> Self {
        let scan_axis = path.start.motion_dir;
        // make the frame exactly orthonormal even if the stored directions
        // carry rounding (e.g. after a plan-file round trip)
        let depth = path.start.view_dir - scan_axis * scan_axis.dot(&path.start.view_dir);
        let depth_axis = depth.normalize();
        Self {
            origin: path.start.position,
            scan_axis,
            depth_axis,
            lateral_axis: scan_axis.cross(&depth_axis),
            scan_length: (path.end.position - path.start.position).dot(&scan_axis),
            width: scanner.fov_width,
            depth_min: scanner.standoff - scanner.depth_tolerance,
            depth_max: scanner.standoff + scanner.depth_tolerance,
        }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        point_covered(p, self)
    }
}

/// True iff `p`, expressed in the cuboid frame, lies within all three
/// extents.
pub fn point_covered(p: &Vec3, cuboid: &SweptCuboid) -> bool {
    let d = p - cuboid.origin;
    let s = d.dot(&cuboid.scan_axis);
    let l = d.dot(&cuboid.lateral_axis);
    let z = d.dot(&cuboid.depth_axis);
    s >= -FACE_SLACK
        && s <= cuboid.scan_length + FACE_SLACK
        && l.abs() <= cuboid.width / 2.0 + FACE_SLACK
        && z >= cuboid.depth_min - FACE_SLACK
        && z <= cuboid.depth_max + FACE_SLACK
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    /// Covered fraction of all points, in [0, 1].
    pub rate: f64,
    pub covered: usize,
    pub total: usize,
    /// Indices of points no path sees, ascending.
    pub uncovered: Vec<usize>,
    /// Paths whose slab is wider than the field of view.
    pub wide_paths: usize,
}

/// Fraction of points inside at least one path's swept cuboid.
pub fn coverage_rate(
    points: &[Vec3],
    paths: &[LocalPath],
    scanner: &ScannerModel,
) -> Result<CoverageReport> {
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let boxes: Vec<SweptCuboid> = paths
        .iter()
        .map(|p| SweptCuboid::from_path(p, scanner))
        .collect();
    let seen: Vec<bool> = points
        .par_iter()
        .map(|p| boxes.iter().any(|b| b.contains(p)))
        .collect();
    let uncovered: Vec<usize> = (0..points.len()).filter(|&i| !seen[i]).collect();
    let covered = points.len() - uncovered.len();
    let wide_paths = paths.iter().filter(|p| p.exceeds_fov).count();
    if wide_paths > 0 {
        log::warn!("{wide_paths} scan paths are wider than the field of view");
    }
    Ok(CoverageReport {
        rate: covered as f64 / points.len() as f64,
        covered,
        total: points.len(),
        uncovered,
        wide_paths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localpath::Viewpoint;

    fn straight_path() -> LocalPath {
        let vp = |x: f64| Viewpoint {
            position: Vec3::new(x, 0.0, 300.0),
            view_dir: -Vec3::z(),
            motion_dir: Vec3::x(),
            target: Vec3::new(x, 0.0, 0.0),
        };
        LocalPath {
            id: 1,
            region: 0,
            slab: 1,
            start: vp(0.0),
            end: vp(50.0),
            scan_length: 50.0,
            lateral_width: 10.0,
            exceeds_fov: false,
        }
    }

    #[test]
    fn aim_point_is_covered() {
        let cube = SweptCuboid::from_path(&straight_path(), &ScannerModel::default());
        assert!(point_covered(&Vec3::zeros(), &cube));
        assert!(point_covered(&Vec3::new(50.0, 0.0, 0.0), &cube));
        assert!(point_covered(&Vec3::new(25.0, 35.0, -5.0), &cube));
    }

    #[test]
    fn lateral_boundary() {
        let cube = SweptCuboid::from_path(&straight_path(), &ScannerModel::default());
        assert!(!point_covered(&Vec3::new(10.0, 36.0, 0.0), &cube));
        assert!(!point_covered(&Vec3::new(10.0, -36.0, 0.0), &cube));
    }

    #[test]
    fn depth_band() {
        let cube = SweptCuboid::from_path(&straight_path(), &ScannerModel::default());
        assert!(!point_covered(&Vec3::new(10.0, 0.0, -6.0), &cube));
        assert!(!point_covered(&Vec3::new(10.0, 0.0, 6.0), &cube));
        assert!(!point_covered(&Vec3::new(-1.0, 0.0, 0.0), &cube));
        assert!(!point_covered(&Vec3::new(51.0, 0.0, 0.0), &cube));
    }

    #[test]
    fn empty_plan_and_empty_cloud() {
        let r = coverage_rate(&[Vec3::zeros()], &[], &ScannerModel::default()).unwrap();
        assert_eq!(r.rate, 0.0);
        assert_eq!(r.uncovered, vec![0]);
        assert!(matches!(
            coverage_rate(&[], &[straight_path()], &ScannerModel::default()),
            Err(Error::EmptyCloud)
        ));
    }
}
