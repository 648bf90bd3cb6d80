//! Run configuration: one flat table of tunables.
//!
//! Values come from, in increasing precedence: built-in defaults, a TOML
//! file of flat `key = value` lines, `LINESCAN_<KEY>` environment
//! variables, and explicit overrides (`key=value`).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloudio::DEFAULT_FEATURE_K;
use crate::error::{Error, Result};
use crate::localpath::ScannerModel;
use crate::planner::PsoConfig;
use crate::segmentation::{SegmentationConfig, Weights};

pub const ENV_PREFIX: &str = "LINESCAN_";

/// How PCA normal signs are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalMode {
    /// Toward a point far above the part (+z side).
    Sensor,
    /// Away from the cloud centroid; suits closed or convex parts.
    Outward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanFormat {
    Json,
    Csv,
}

impl PlanFormat {
    pub fn extension(self) -> &'static str {
        match self {
            PlanFormat::Json => "json",
            PlanFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub seed: u64,
    /// Points drawn from a mesh input.
    pub sample_count: usize,
    pub feature_k: usize,
    pub normal_mode: NormalMode,

    /// Sensor-to-surface working distance (mm).
    pub standoff: f64,
    /// Scan line width on the surface (mm).
    pub fov_width: f64,
    /// Half-height of the in-focus depth band (mm).
    pub depth_tolerance: f64,
    /// Lines per second.
    pub line_rate: f64,
    /// Constant robot speed (mm/s).
    pub speed: f64,

    pub ransac_distance_threshold: f64,
    pub ransac_iterations: usize,
    pub ransac_min_inlier_fraction: f64,
    /// Largest allowed angular distance to a cluster centroid (rad).
    pub similarity_threshold: f64,
    pub normal_weight: f64,
    pub curvature_weight: f64,
    pub max_clusters: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub euclidean_split_radius: Option<f64>,
    pub min_region_size: usize,

    pub pso_swarm_size: usize,
    pub pso_iterations: usize,
    pub pso_inertia: f64,
    pub pso_velocity_clamp: f64,

    /// Coverage below this makes the run finish with a warning.
    pub coverage_floor: f64,
    pub plan_format: PlanFormat,
}

impl Default for PlanConfig {
    fn default() -> Self {
        let scanner = ScannerModel::default();
        let seg = SegmentationConfig::default();
        let pso = PsoConfig::default();
        Self {
            seed: 0,
            sample_count: 10_000,
            feature_k: DEFAULT_FEATURE_K,
            normal_mode: NormalMode::Sensor,
            standoff: scanner.standoff,
            fov_width: scanner.fov_width,
            depth_tolerance: scanner.depth_tolerance,
            line_rate: scanner.line_rate,
            speed: 50.0,
            ransac_distance_threshold: seg.ransac_distance_threshold,
            ransac_iterations: seg.ransac_iterations,
            ransac_min_inlier_fraction: seg.ransac_min_inlier_fraction,
            similarity_threshold: seg.similarity_threshold,
            normal_weight: seg.weights.normal,
            curvature_weight: seg.weights.curvature,
            max_clusters: seg.max_clusters,
            euclidean_split_radius: seg.euclidean_split_radius,
            min_region_size: seg.min_region_size,
            pso_swarm_size: pso.swarm_size,
            pso_iterations: pso.iterations,
            pso_inertia: pso.inertia,
            pso_velocity_clamp: pso.velocity_clamp,
            coverage_floor: 0.9,
            plan_format: PlanFormat::Json,
        }
    }
}

impl PlanConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::parse(line, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Sets one key from its textual value. Values are read as JSON
    /// scalars (`300`, `true`, `"csv"`); anything else is taken as a bare
    /// string.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let mut map = match serde_json::to_value(&*self) {
            Ok(serde_json::Value::Object(m)) => m,
            _ => unreachable!("config serializes to an object"),
        };
        let parsed = serde_json::from_str(value.trim())
            .unwrap_or_else(|_| serde_json::Value::String(value.trim().to_string()));
        map.insert(key.to_string(), parsed);
        *self = serde_json::from_value(serde_json::Value::Object(map))
            .map_err(|e| Error::InvalidParameter(format!("{key} = {value}: {e}")))?;
        Ok(())
    }

    /// Parses `key=value` and applies it.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!("expected key=value, got {assignment:?}"))
        })?;
        self.set(key.trim(), value)
    }

    /// Applies every `LINESCAN_<KEY>` variable; names are lowercased.
    /// Variables that match no key are ignored with a warning.
    pub fn apply_env<I>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut vars: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                k.strip_prefix(ENV_PREFIX)
                    .map(|k| (k.to_ascii_lowercase(), v))
            })
            .collect();
        vars.sort();
        for (key, value) in vars {
            if !Self::is_key(&key) {
                log::warn!(
                    "ignoring {ENV_PREFIX}{}: not a configuration key",
                    key.to_ascii_uppercase()
                );
                continue;
            }
            self.set(&key, &value)?;
        }
        Ok(())
    }

    fn is_key(key: &str) -> bool {
        key == "euclidean_split_radius"
            || matches!(serde_json::to_value(Self::default()), Ok(serde_json::Value::Object(m)) if m.contains_key(key))
    }

    pub fn scanner(&self) -> ScannerModel {
        ScannerModel {
            standoff: self.standoff,
            fov_width: self.fov_width,
            depth_tolerance: self.depth_tolerance,
            line_rate: self.line_rate,
        }
    }

    pub fn segmentation(&self) -> SegmentationConfig {
        SegmentationConfig {
            ransac_distance_threshold: self.ransac_distance_threshold,
            ransac_iterations: self.ransac_iterations,
            ransac_min_inlier_fraction: self.ransac_min_inlier_fraction,
            similarity_threshold: self.similarity_threshold,
            weights: Weights {
                normal: self.normal_weight,
                curvature: self.curvature_weight,
            },
            max_clusters: self.max_clusters,
            euclidean_split_radius: self.euclidean_split_radius,
            min_region_size: self.min_region_size,
            seed: self.seed,
        }
    }

    pub fn pso(&self) -> PsoConfig {
        PsoConfig {
            swarm_size: self.pso_swarm_size,
            iterations: self.pso_iterations,
            inertia: self.pso_inertia,
            velocity_clamp: self.pso_velocity_clamp,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count == 0 {
            return Err(Error::InvalidParameter("sample_count must be >= 1".into()));
        }
        if self.feature_k < 6 {
            return Err(Error::InvalidParameter("feature_k must be >= 6".into()));
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return Err(Error::InvalidParameter("speed must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.coverage_floor) {
            return Err(Error::InvalidParameter(
                "coverage_floor must lie in [0, 1]".into(),
            ));
        }
        self.scanner().validate()?;
        self.segmentation().validate()?;
        self.pso().validate()
    }
}
