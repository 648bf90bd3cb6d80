//! Local scan segments: each region is cut into three slabs along its
//! longest axis, and each slab gets one straight scan with a viewpoint at
//! either end.

use crate::cloudio::FeatureCloud;
use crate::error::{Error, Result};
use crate::geometry::{canonical_sign, covariance, sorted_eigen, Vec3};
use crate::segmentation::Region;

/// Relative eigenvalue gap below which the two largest position variances
/// count as tied.
const AXIS_TIE_TOLERANCE: f64 = 1e-6;
const MIN_EXTENT: f64 = 1e-9;

/// Line-scan sensor geometry, millimeters and lines per second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScannerModel {
    /// Working distance from sensor to surface (depth of view).
    pub standoff: f64,
    /// Width of the scan line on the surface (field of view).
    pub fov_width: f64,
    /// Half-width of the in-focus band around the standoff.
    pub depth_tolerance: f64,
    pub line_rate: f64,
}

impl Default for ScannerModel {
    fn default() -> Self {
        Self {
            standoff: 300.0,
            fov_width: 70.0,
            depth_tolerance: 5.0,
            line_rate: 3000.0,
        }
    }
}

impl ScannerModel {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("standoff", self.standoff),
            ("fov_width", self.fov_width),
            ("depth_tolerance", self.depth_tolerance),
            ("line_rate", self.line_rate),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "scanner {name} = {v} must be positive"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubRegion {
    pub parent: usize,
    /// 1, 2 or 3 along the scan axis.
    pub slab: u8,
    pub indices: Vec<usize>,
    pub centroid: Vec3,
    /// Mean member normal, unit length.
    pub normal: Vec3,
    /// Parent's principal axis projected into the plane orthogonal to
    /// `normal`, unit length. This is the motion direction.
    pub scan_axis: Vec3,
    /// Parent's principal axis as computed from the member positions.
    pub parent_axis: Vec3,
    /// Slabs were cut at count quantiles because the middle third of the
    /// extent was empty.
    pub quantile_split: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewpoint {
    pub position: Vec3,
    /// Unit direction the sensor looks along.
    pub view_dir: Vec3,
    /// Unit direction of travel during the scan.
    pub motion_dir: Vec3,
    /// Surface point this viewpoint is aimed at.
    pub target: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalPath {
    /// 1-based, dense over a plan.
    pub id: usize,
    pub region: usize,
    pub slab: u8,
    /// Entry viewpoint when scanned forward.
    pub start: Viewpoint,
    /// Exit viewpoint when scanned forward.
    pub end: Viewpoint,
    pub scan_length: f64,
    /// Extent of the slab across the scan line.
    pub lateral_width: f64,
    /// The slab is wider than the field of view; some of it will be missed.
    pub exceeds_fov: bool,
}

/// Principal axis of a point set, with a deterministic choice inside a
/// tied eigenspace and sign fixed so the largest component is positive.
fn principal_axis(points: &[Vec3]) -> Option<Vec3> {
    let (_, cov) = covariance(points.iter());
    let eig = sorted_eigen(&cov);
    let top = eig.values[2];
    if !(top > 0.0) {
        return None;
    }
    let tied: Vec<Vec3> = (0..3)
        .filter(|&k| top - eig.values[k] <= AXIS_TIE_TOLERANCE * top)
        .map(|k| eig.vectors[k])
        .collect();
    let axis = if tied.len() == 1 {
        tied[0]
    } else {
        // Project the coordinate axes into the tied eigenspace and keep the
        // longest projection, preferring x, then y, then z.
        let project = |a: Vec3| tied.iter().map(|e| e * e.dot(&a)).sum::<Vec3>();
        let mut best = project(Vec3::x());
        for a in [Vec3::y(), Vec3::z()] {
            let p = project(a);
            if p.norm() > best.norm() + 1e-12 {
                best = p;
            }
        }
        best.normalize()
    };
    Some(canonical_sign(axis))
}

fn degenerate(label: usize, reason: impl Into<String>) -> Error {
    Error::DegenerateRegion {
        label,
        reason: reason.into(),
    }
}

/// Cuts a region into three slabs of equal length along its principal
/// axis. Falls back to equal-count slabs if the middle slab would be empty.
pub fn subdivide_region(region: &Region, cloud: &FeatureCloud) -> Result<[SubRegion; 3]> {
    let label = region.label;
    let points: Vec<Vec3> = region.indices.iter().map(|&i| cloud.positions[i]).collect();
    if points.len() < 3 {
        return Err(degenerate(label, "fewer than 3 points"));
    }
    let axis = principal_axis(&points).ok_or_else(|| degenerate(label, "all points coincide"))?;
    let origin = region.centroid;
    let proj: Vec<f64> = points.iter().map(|p| (p - origin).dot(&axis)).collect();
    let lo = proj.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = proj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let extent = hi - lo;
    if !(extent > MIN_EXTENT) {
        return Err(degenerate(label, "no extent along the principal axis"));
    }

    let mut slab_of: Vec<usize> = proj
        .iter()
        .map(|&s| (((s - lo) / extent * 3.0).floor() as usize).min(2))
        .collect();
    let mut quantile_split = false;
    if !slab_of.contains(&1) {
        quantile_split = true;
        let mut order: Vec<usize> = (0..proj.len()).collect();
        order.sort_by(|&a, &b| proj[a].total_cmp(&proj[b]).then(a.cmp(&b)));
        let n = order.len();
        for (rank, &k) in order.iter().enumerate() {
            slab_of[k] = rank * 3 / n;
        }
        log::warn!("region {label}: middle slab empty, split by point count");
    }

    let mut subs = Vec::with_capacity(3);
    for slab in 0..3 {
        let members: Vec<usize> = (0..points.len()).filter(|&k| slab_of[k] == slab).collect();
        if members.is_empty() {
            return Err(degenerate(label, format!("slab {} is empty", slab + 1)));
        }
        let indices: Vec<usize> = members.iter().map(|&k| region.indices[k]).collect();
        let centroid = crate::geometry::centroid(members.iter().map(|&k| &points[k]));
        let normal_sum: Vec3 = indices.iter().map(|&i| cloud.normals[i]).sum();
        if !(normal_sum.norm() > 1e-12) {
            return Err(degenerate(
                label,
                format!("slab {} normals cancel out", slab + 1),
            ));
        }
        let normal = normal_sum.normalize();
        let along = axis - normal * axis.dot(&normal);
        if !(along.norm() > 1e-9) {
            return Err(degenerate(
                label,
                format!("slab {} normal is parallel to the scan axis", slab + 1),
            ));
        }
        subs.push(SubRegion {
            parent: label,
            slab: slab as u8 + 1,
            indices,
            centroid,
            normal,
            scan_axis: along.normalize(),
            parent_axis: axis,
            quantile_split,
        });
    }
    Ok(subs.try_into().expect("three slabs"))
}

/// One straight scan over a slab. The aim points lie on the line through
/// the slab centroid along the scan axis, at the extreme projections of the
/// members within half a field of view of that line. Each viewpoint sits
/// `standoff` out along the outward slab normal and looks back along it.
pub fn generate_local_path(
    sub: &SubRegion,
    cloud: &FeatureCloud,
    scanner: &ScannerModel,
    id: usize,
) -> Result<LocalPath> {
    let motion = sub.scan_axis;
    let view = -sub.normal;
    let lateral = motion.cross(&view);
    let half_fov = scanner.fov_width / 2.0;

    let offsets: Vec<(f64, f64)> = sub
        .indices
        .iter()
        .map(|&i| {
            let d = cloud.positions[i] - sub.centroid;
            (d.dot(&motion), d.dot(&lateral))
        })
        .collect();
    let in_band: Vec<f64> = offsets
        .iter()
        .filter(|(_, l)| l.abs() <= half_fov)
        .map(|(s, _)| *s)
        .collect();
    let along: Vec<f64> = if in_band.is_empty() {
        offsets.iter().map(|(s, _)| *s).collect()
    } else {
        in_band
    };
    let s_min = along.iter().copied().fold(f64::INFINITY, f64::min);
    let s_max = along.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(s_max - s_min > MIN_EXTENT) {
        return Err(degenerate(
            sub.parent,
            format!("slab {} has no length along the scan axis", sub.slab),
        ));
    }
    let l_min = offsets.iter().map(|o| o.1).fold(f64::INFINITY, f64::min);
    let l_max = offsets
        .iter()
        .map(|o| o.1)
        .fold(f64::NEG_INFINITY, f64::max);
    let lateral_width = l_max - l_min;
    let exceeds_fov = lateral_width > scanner.fov_width;
    if exceeds_fov {
        log::warn!(
            "region {} slab {}: {:.1} mm wide, field of view is {:.1} mm",
            sub.parent,
            sub.slab,
            lateral_width,
            scanner.fov_width
        );
    }

    let viewpoint = |s: f64| {
        let target = sub.centroid + motion * s;
        Viewpoint {
            position: target + sub.normal * scanner.standoff,
            view_dir: view,
            motion_dir: motion,
            target,
        }
    };
    Ok(LocalPath {
        id,
        region: sub.parent,
        slab: sub.slab,
        start: viewpoint(s_min),
        end: viewpoint(s_max),
        scan_length: s_max - s_min,
        lateral_width,
        exceeds_fov,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct LocalPlan {
    pub paths: Vec<LocalPath>,
    /// Labels of regions that received paths, in order.
    pub planned_regions: Vec<usize>,
    /// Regions left without paths and why.
    pub skipped: Vec<(usize, String)>,
}

impl LocalPlan {
    pub fn viewpoint_count(&self) -> usize {
        2 * self.paths.len()
    }
}

/// Three paths per region. Regions below `min_region_size` points, or
/// whose geometry cannot be cut into three slabs, are skipped and listed.
pub fn plan_local_paths(
    regions: &[Region],
    cloud: &FeatureCloud,
    scanner: &ScannerModel,
    min_region_size: usize,
) -> Result<LocalPlan> {
    scanner.validate()?;
    let mut plan = LocalPlan::default();
    for region in regions {
        if region.len() < min_region_size.max(3) {
            plan.skipped
                .push((region.label, format!("only {} points", region.len())));
            continue;
        }
        let attempt = subdivide_region(region, cloud).and_then(|subs| {
            let base = plan.paths.len();
            subs.iter()
                .enumerate()
                .map(|(k, sub)| generate_local_path(sub, cloud, scanner, base + k + 1))
                .collect::<Result<Vec<_>>>()
        });
        match attempt {
            Ok(paths) => {
                plan.paths.extend(paths);
                plan.planned_regions.push(region.label);
            }
            Err(Error::DegenerateRegion { reason, .. }) => {
                log::warn!("region {}: skipped, {reason}", region.label);
                plan.skipped.push((region.label, reason));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_cloud(w: f64, h: f64, step: f64) -> FeatureCloud {
        let nx = (w / step).round() as usize;
        let ny = (h / step).round() as usize;
        let mut pts = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                pts.push(Vec3::new(i as f64 * step, j as f64 * step, 0.0));
            }
        }
        let n = pts.len();
        FeatureCloud::from_parts(pts, vec![Vec3::z(); n], vec![0.0; n], vec![0.0; n])
    }

    fn whole(cloud: &FeatureCloud) -> Region {
        Region::new(cloud, (0..cloud.len()).collect())
    }

    #[test]
    fn rectangle_splits_into_three_squares() {
        let cloud = flat_cloud(90.0, 30.0, 1.0);
        let subs = subdivide_region(&whole(&cloud), &cloud).unwrap();
        let total = cloud.len() as f64;
        for (k, s) in subs.iter().enumerate() {
            assert_eq!(s.slab as usize, k + 1);
            assert!((s.scan_axis - Vec3::x()).norm() < 1e-9);
            assert!((s.normal - Vec3::z()).norm() < 1e-12);
            assert!((s.indices.len() as f64 / total - 1.0 / 3.0).abs() < 0.02);
            assert!(!s.quantile_split);
        }
        assert!((subs[0].centroid.x - 15.0).abs() < 0.6);
        assert!((subs[2].centroid.x - 75.0).abs() < 0.6);
    }

    #[test]
    fn square_tie_picks_x() {
        let cloud = flat_cloud(60.0, 60.0, 1.0);
        let subs = subdivide_region(&whole(&cloud), &cloud).unwrap();
        assert!((subs[0].parent_axis - Vec3::x()).norm() < 1e-9);
        let counts: Vec<usize> = subs.iter().map(|s| s.indices.len()).collect();
        assert!(
            counts.iter().all(|&c| (1200..=1300).contains(&c)),
            "{counts:?}"
        );
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let n = 10;
        let cloud = FeatureCloud::from_parts(
            vec![Vec3::x(); n],
            vec![Vec3::z(); n],
            vec![0.0; n],
            vec![0.0; n],
        );
        assert!(matches!(
            subdivide_region(&whole(&cloud), &cloud),
            Err(Error::DegenerateRegion { .. })
        ));
    }

    #[test]
    fn empty_middle_falls_back_to_quantiles() {
        // two clumps at the ends of a line-like region
        let mut pts = Vec::new();
        for i in 0..30 {
            pts.push(Vec3::new((i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1, 0.0));
            pts.push(Vec3::new(
                100.0 + (i % 5) as f64 * 0.1,
                (i / 5) as f64 * 0.1,
                0.0,
            ));
        }
        let n = pts.len();
        let cloud = FeatureCloud::from_parts(pts, vec![Vec3::z(); n], vec![0.0; n], vec![0.0; n]);
        let subs = subdivide_region(&whole(&cloud), &cloud).unwrap();
        assert!(subs
            .iter()
            .all(|s| s.quantile_split && s.indices.len() == 20));
    }

    #[test]
    fn flat_slab_viewpoints_above_edge_midpoints() {
        let cloud = flat_cloud(30.0, 30.0, 0.5);
        let subs = subdivide_region(&whole(&cloud), &cloud).unwrap();
        let sub = SubRegion {
            indices: (0..cloud.len()).collect(),
            centroid: Vec3::new(15.0, 15.0, 0.0),
            ..subs[0].clone()
        };
        let path = generate_local_path(&sub, &cloud, &ScannerModel::default(), 1).unwrap();
        assert!((path.start.position - Vec3::new(0.0, 15.0, 300.0)).norm() < 1e-9);
        assert!((path.end.position - Vec3::new(30.0, 15.0, 300.0)).norm() < 1e-9);
        assert_eq!(path.start.view_dir, -Vec3::z());
        assert_eq!(path.start.motion_dir, path.end.motion_dir);
        assert!((path.scan_length - 30.0).abs() < 1e-9);
        for v in [path.start, path.end] {
            assert!(((v.position - v.target).norm() - 300.0).abs() < 1e-6);
        }
        assert!(!path.exceeds_fov);
    }

    #[test]
    fn wide_slab_is_flagged() {
        let cloud = flat_cloud(300.0, 200.0, 2.0);
        let plan =
            plan_local_paths(&[whole(&cloud)], &cloud, &ScannerModel::default(), 10).unwrap();
        assert_eq!(plan.paths.len(), 3);
        assert!(plan.paths.iter().all(|p| p.exceeds_fov));
    }

    #[test]
    fn small_regions_are_skipped() {
        let cloud = flat_cloud(10.0, 2.0, 1.0);
        let plan =
            plan_local_paths(&[whole(&cloud)], &cloud, &ScannerModel::default(), 50).unwrap();
        assert!(plan.paths.is_empty());
        assert_eq!(plan.skipped.len(), 1);
    }
}
