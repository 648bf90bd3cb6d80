//! End-to-end planning: load, featurize, segment, place local paths, order
//! them, and check coverage.
//!
//! Everything is computed before the output directory is touched, so a
//! failing run leaves no partial artifacts behind.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::cloudio::{
    default_orientation, estimate_features, load_cloud, load_stl, sample_mesh, write_labeled_ply,
    write_ply, CloudFormat, FeatureCloud, NormalOrientation, PointCloud,
};
use crate::config::{NormalMode, PlanConfig};
use crate::coverage::{coverage_rate, CoverageReport};
use crate::error::{Error, Result};
use crate::geometry::centroid;
use crate::localpath::{plan_local_paths, LocalPlan};
use crate::plan_file::{emit_plan, load_plan, PlanDocument};
use crate::planner::{pso_optimize, Tour};
use crate::segmentation::{segment, Segmentation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Ply,
    Xyz,
    Stl,
}

impl InputFormat {
    pub fn from_extension(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "stl" => Some(InputFormat::Stl),
            _ => match CloudFormat::from_extension(path)? {
                CloudFormat::PlyAscii => Some(InputFormat::Ply),
                CloudFormat::XyzCsv => Some(InputFormat::Xyz),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    /// Segmentation converged and coverage reached the floor.
    Success,
    /// A plan was produced but one of those checks failed.
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub input: Option<PathBuf>,
    pub seed: u64,
    pub point_count: usize,
    pub region_count: usize,
    pub plane_count: usize,
    /// Regions that received local paths.
    pub planned_region_count: usize,
    pub local_path_count: usize,
    pub viewpoint_count: usize,
    pub segmentation_time_s: f64,
    pub segmentation_converged: bool,
    pub tour_length_mm: f64,
    pub tour_time_s: f64,
    pub speed_mm_s: f64,
    pub coverage_rate: f64,
    pub coverage_floor: f64,
    pub uncovered_count: usize,
    pub paths_exceeding_fov: usize,
    pub status: RunStatus,
    pub warnings: Vec<String>,
}

impl PlanReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Everything a run produced.
#[derive(Debug, Clone)]
pub struct PlanRun {
    pub config: PlanConfig,
    pub features: FeatureCloud,
    pub segmentation: Segmentation,
    pub local_plan: LocalPlan,
    pub tour: Tour,
    pub coverage: CoverageReport,
    pub document: PlanDocument,
    pub report: PlanReport,
}

/// Reads a cloud, or samples `sample_count` points from a mesh.
pub fn load_input(
    path: &Path,
    format: Option<InputFormat>,
    cfg: &PlanConfig,
) -> Result<PointCloud> {
    let format = format
        .or_else(|| InputFormat::from_extension(path))
        .ok_or_else(|| {
            Error::InvalidParameter(format!("cannot tell the format of {}", path.display()))
        })?;
    let mut cloud = match format {
        InputFormat::Ply => load_cloud(path, CloudFormat::PlyAscii)?,
        InputFormat::Xyz => load_cloud(path, CloudFormat::XyzCsv)?,
        InputFormat::Stl => sample_mesh(&load_stl(path)?, cfg.sample_count, cfg.seed)?,
    };
    if let Some(src) = cloud.source.as_mut() {
        src.path = Some(path.to_path_buf());
    }
    Ok(cloud)
}

fn orientation(cloud: &PointCloud, mode: NormalMode) -> NormalOrientation {
    match mode {
        NormalMode::Sensor => default_orientation(cloud),
        NormalMode::Outward => NormalOrientation::AwayFrom(centroid(&cloud.points)),
    }
}

/// Runs every stage on an in-memory cloud.
pub fn plan_cloud(cloud: &PointCloud, cfg: &PlanConfig) -> Result<PlanRun> {
    cfg.validate()?;
    let features = estimate_features(cloud, cfg.feature_k, orientation(cloud, cfg.normal_mode))
        .map_err(|e| e.in_stage("features"))?;
    let mut run = plan_features(features, cfg)?;
    run.report.input = cloud.source.as_ref().and_then(|s| s.path.clone());
    run.report.point_count = cloud.len();
    Ok(run)
}

/// Runs the stages after feature estimation, for callers that orient
/// normals themselves.
pub fn plan_features(features: FeatureCloud, cfg: &PlanConfig) -> Result<PlanRun> {
    cfg.validate()?;
    let started = Instant::now();
    let segmentation =
        segment(&features, &cfg.segmentation()).map_err(|e| e.in_stage("segmentation"))?;
    let segmentation_time_s = started.elapsed().as_secs_f64();
    log::info!(
        "segmentation: {} in {segmentation_time_s:.3} s",
        segmentation.summary()
    );

    let scanner = cfg.scanner();
    let local_plan = plan_local_paths(
        &segmentation.regions,
        &features,
        &scanner,
        cfg.min_region_size,
    )
    .map_err(|e| e.in_stage("local paths"))?;
    for (label, why) in &local_plan.skipped {
        log::warn!("region {label} has no scan paths: {why}");
    }

    let tour = pso_optimize(&local_plan.paths, cfg.speed, &cfg.pso())
        .map_err(|e| e.in_stage("planner"))?;
    let coverage = coverage_rate(&features.positions, &local_plan.paths, &scanner)
        .map_err(|e| e.in_stage("coverage"))?;
    let document =
        PlanDocument::from_tour(&tour, &local_plan.paths, cfg).map_err(|e| e.in_stage("export"))?;

    let mut warnings = Vec::new();
    if !segmentation.converged {
        warnings.push("segmentation did not converge within the cluster limit".to_string());
    }
    if coverage.rate < cfg.coverage_floor {
        warnings.push(format!(
            "coverage {:.4} is below the floor {:.4}",
            coverage.rate, cfg.coverage_floor
        ));
    }
    if !local_plan.skipped.is_empty() {
        warnings.push(format!(
            "{} regions were too small or degenerate to scan",
            local_plan.skipped.len()
        ));
    }
    if coverage.wide_paths > 0 {
        warnings.push(format!(
            "{} scan paths are wider than the field of view",
            coverage.wide_paths
        ));
    }
    let status = if segmentation.converged && coverage.rate >= cfg.coverage_floor {
        RunStatus::Success
    } else {
        RunStatus::Warning
    };

    let report = PlanReport {
        input: None,
        seed: cfg.seed,
        point_count: features.len(),
        region_count: segmentation.regions.len(),
        plane_count: segmentation.plane_count,
        planned_region_count: local_plan.planned_regions.len(),
        local_path_count: local_plan.paths.len(),
        viewpoint_count: local_plan.viewpoint_count(),
        segmentation_time_s,
        segmentation_converged: segmentation.converged,
        tour_length_mm: tour.total_length,
        tour_time_s: tour.total_time,
        speed_mm_s: cfg.speed,
        coverage_rate: coverage.rate,
        coverage_floor: cfg.coverage_floor,
        uncovered_count: coverage.uncovered.len(),
        paths_exceeding_fov: coverage.wide_paths,
        status,
        warnings,
    };
    Ok(PlanRun {
        config: cfg.clone(),
        features,
        segmentation,
        local_plan,
        tour,
        coverage,
        document,
        report,
    })
}

pub const CLUSTERS_FILE: &str = "clusters.ply";
pub const REPORT_FILE: &str = "report.json";
pub const UNCOVERED_FILE: &str = "uncovered.ply";

pub fn plan_file_name(cfg: &PlanConfig) -> String {
    format!("plan.{}", cfg.plan_format.extension())
}

/// Writes the report, and unless `report_only` also the labeled clusters,
/// the plan file and (when some points were missed) the uncovered points.
pub fn write_outputs(run: &PlanRun, out_dir: &Path, report_only: bool) -> Result<()> {
    let write = |name: &str, bytes: &[u8]| {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(path, e))
    };
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    if !report_only {
        let positions = &run.features.positions;
        let labels = run.segmentation.labels(positions.len());
        write(
            CLUSTERS_FILE,
            write_labeled_ply(positions, &labels).as_bytes(),
        )?;
        write(
            &plan_file_name(&run.config),
            emit_plan(&run.document, run.config.plan_format).as_bytes(),
        )?;
        if !run.coverage.uncovered.is_empty() {
            let missed = PointCloud::new(
                run.coverage
                    .uncovered
                    .iter()
                    .map(|&i| positions[i])
                    .collect(),
            );
            write(UNCOVERED_FILE, write_ply(&missed).as_bytes())?;
        }
    }
    write(REPORT_FILE, run.report.to_json().as_bytes())
}

/// Load, plan and write. Input errors surface before anything is written.
pub fn run_pipeline(
    input: &Path,
    format: Option<InputFormat>,
    cfg: &PlanConfig,
    out_dir: &Path,
    report_only: bool,
) -> Result<PlanRun> {
    cfg.validate()?;
    let cloud = load_input(input, format, cfg).map_err(|e| e.in_stage("load"))?;
    let run = plan_cloud(&cloud, cfg)?;
    write_outputs(&run, out_dir, report_only).map_err(|e| e.in_stage("export"))?;
    Ok(run)
}

/// Re-checks coverage of an existing plan against a cloud. Mesh inputs are
/// resampled with the plan's own seed and sample count.
pub fn verify_plan(
    plan: &Path,
    cloud: &Path,
    format: Option<InputFormat>,
) -> Result<CoverageReport> {
    let doc = load_plan(plan).map_err(|e| e.in_stage("load"))?;
    let points = load_input(cloud, format, &doc.config).map_err(|e| e.in_stage("load"))?;
    let paths = doc.local_paths()?;
    coverage_rate(&points.points, &paths, &doc.config.scanner()).map_err(|e| e.in_stage("coverage"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_from_extension() {
        assert_eq!(
            InputFormat::from_extension(Path::new("a.STL")),
            Some(InputFormat::Stl)
        );
        assert_eq!(
            InputFormat::from_extension(Path::new("a.ply")),
            Some(InputFormat::Ply)
        );
        assert_eq!(
            InputFormat::from_extension(Path::new("a.csv")),
            Some(InputFormat::Xyz)
        );
        assert_eq!(InputFormat::from_extension(Path::new("a.obj")), None);
    }

    #[test]
    fn missing_input_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let err = run_pipeline(
            &dir.path().join("none.ply"),
            None,
            &PlanConfig::default(),
            &out,
            false,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Stage { stage: "load", .. }), "{err}");
        assert!(!out.exists());
    }
}
