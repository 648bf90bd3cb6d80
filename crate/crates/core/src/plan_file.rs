//! Plan files: the ordered viewpoint list a robot cell consumes.
//!
//! Each local path contributes two consecutive records, its entry and exit
//! viewpoint in travel order. The entry record carries the leg that arrives
//! there (`start` for the first path, `transit` otherwise); the exit record
//! carries the scan leg. Lengths are in mm, times in s, and every number
//! is written with six decimals.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::{PlanConfig, PlanFormat};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::localpath::{LocalPath, Viewpoint};
use crate::planner::{Direction, Tour};

const MAGIC: &str = "linescan-plan";
const CSV_COLUMNS: &str = "seq,path_id,endpoint,x,y,z,dx,dy,dz,lx,ly,lz,leg,duration_s";

/// Which end of its local path a viewpoint is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Endpoint {
    /// The path's start viewpoint.
    #[serde(rename = "p")]
    Start,
    /// The path's end viewpoint.
    #[serde(rename = "p*")]
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Leg {
    Start,
    Transit,
    Scan,
}

impl Endpoint {
    fn as_str(self) -> &'static str {
        match self {
            Endpoint::Start => "p",
            Endpoint::End => "p*",
        }
    }
}

impl FromStr for Endpoint {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "p" => Ok(Endpoint::Start),
            "p*" => Ok(Endpoint::End),
            _ => Err(format!("unknown endpoint {s:?}")),
        }
    }
}

impl Leg {
    fn as_str(self) -> &'static str {
        match self {
            Leg::Start => "start",
            Leg::Transit => "transit",
            Leg::Scan => "scan",
        }
    }
}

impl FromStr for Leg {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "start" => Ok(Leg::Start),
            "transit" => Ok(Leg::Transit),
            "scan" => Ok(Leg::Scan),
            _ => Err(format!("unknown leg {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanRecord {
    pub seq: usize,
    pub path_id: usize,
    pub endpoint: Endpoint,
    pub position: Vec3,
    /// Sensor viewing direction.
    pub view_dir: Vec3,
    /// Direction of travel while scanning this path.
    pub motion_dir: Vec3,
    /// Leg ending at this viewpoint.
    pub leg: Leg,
    pub duration_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanDocument {
    pub config: PlanConfig,
    pub records: Vec<PlanRecord>,
}

impl PlanDocument {
    pub fn from_tour(tour: &Tour, paths: &[LocalPath], config: &PlanConfig) -> Result<Self> {
        let by_id: HashMap<usize, &LocalPath> = paths.iter().map(|p| (p.id, p)).collect();
        let mut records = Vec::with_capacity(2 * tour.len());
        for (i, (&id, &dir)) in tour.order.iter().zip(&tour.directions).enumerate() {
            let path = by_id.get(&id).ok_or_else(|| {
                Error::InvalidPermutation(format!("tour names unknown path {id}"))
            })?;
            let (entry, exit, first, second, sign) = match dir {
                Direction::Forward => (&path.start, &path.end, Endpoint::Start, Endpoint::End, 1.0),
                Direction::Reverse => {
                    (&path.end, &path.start, Endpoint::End, Endpoint::Start, -1.0)
                }
            };
            let (leg, arrive) = if i == 0 {
                (Leg::Start, 0.0)
            } else {
                (Leg::Transit, tour.transit_times[i - 1])
            };
            for (vp, endpoint, leg, duration_s) in [
                (entry, first, leg, arrive),
                (exit, second, Leg::Scan, tour.scan_times[i]),
            ] {
                records.push(PlanRecord {
                    seq: records.len(),
                    path_id: id,
                    endpoint,
                    position: vp.position,
                    view_dir: vp.view_dir,
                    motion_dir: vp.motion_dir * sign,
                    leg,
                    duration_s,
                });
            }
        }
        Ok(Self {
            config: config.clone(),
            records,
        })
    }

    /// Checks the pairing structure: records come in consecutive pairs for
    /// one path each, entry then exit, every path once.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidPlan(m));
        if !self.records.len().is_multiple_of(2) {
            return bad(format!(
                "{} records; expected two per path",
                self.records.len()
            ));
        }
        let mut seen = std::collections::HashSet::new();
        for (i, r) in self.records.iter().enumerate() {
            if r.seq != i {
                return bad(format!("record {i} has seq {}", r.seq));
            }
            if !(r
                .position
                .iter()
                .chain(r.view_dir.iter())
                .chain(r.motion_dir.iter())
                .all(|v| v.is_finite())
                && r.duration_s.is_finite()
                && r.duration_s >= 0.0)
            {
                return bad(format!("record {i} has a non-finite or negative value"));
            }
        }
        for (k, pair) in self.records.chunks(2).enumerate() {
            let (a, b) = (&pair[0], &pair[1]);
            if a.path_id != b.path_id || a.endpoint == b.endpoint {
                return bad(format!(
                    "records {} and {} are not the two ends of one path",
                    a.seq, b.seq
                ));
            }
            let want = if k == 0 { Leg::Start } else { Leg::Transit };
            if a.leg != want || b.leg != Leg::Scan {
                return bad(format!(
                    "path {} has legs {}/{}",
                    a.path_id,
                    a.leg.as_str(),
                    b.leg.as_str()
                ));
            }
            if !seen.insert(a.path_id) {
                return bad(format!("path {} appears twice", a.path_id));
            }
        }
        Ok(())
    }

    pub fn order_and_directions(&self) -> Result<(Vec<usize>, Vec<Direction>)> {
        self.validate()?;
        Ok(self
            .records
            .chunks(2)
            .map(|pair| {
                let dir = match pair[0].endpoint {
                    Endpoint::Start => Direction::Forward,
                    Endpoint::End => Direction::Reverse,
                };
                (pair[0].path_id, dir)
            })
            .unzip())
    }

    /// Rebuilds the scan geometry of each path (region and slab are not
    /// stored and come back as 0).
    pub fn local_paths(&self) -> Result<Vec<LocalPath>> {
        self.validate()?;
        let standoff = self.config.standoff;
        let mut paths: Vec<LocalPath> = self
            .records
            .chunks(2)
            .map(|pair| {
                let reversed = pair[0].endpoint == Endpoint::End;
                let (s, e) = if reversed {
                    (&pair[1], &pair[0])
                } else {
                    (&pair[0], &pair[1])
                };
                let vp = |r: &PlanRecord| Viewpoint {
                    position: r.position,
                    view_dir: r.view_dir,
                    motion_dir: if reversed {
                        -r.motion_dir
                    } else {
                        r.motion_dir
                    },
                    target: r.position + r.view_dir * standoff,
                };
                LocalPath {
                    id: s.path_id,
                    region: 0,
                    slab: 0,
                    start: vp(s),
                    end: vp(e),
                    scan_length: (e.position - s.position).norm(),
                    lateral_width: 0.0,
                    exceeds_fov: false,
                }
            })
            .collect();
        paths.sort_by_key(|p| p.id);
        Ok(paths)
    }
}

fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".to_string()
    } else {
        s
    }
}

fn config_json(config: &PlanConfig) -> String {
    serde_json::to_string(config).expect("config serializes")
}

pub fn emit_plan(doc: &PlanDocument, format: PlanFormat) -> String {
    match format {
        PlanFormat::Json => emit_json(doc),
        PlanFormat::Csv => emit_csv(doc),
    }
}

fn emit_json(doc: &PlanDocument) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format\": \"{MAGIC}\",");
    out.push_str("  \"units\": {\"length\": \"mm\", \"time\": \"s\"},\n");
    let _ = writeln!(out, "  \"seed\": {},", doc.config.seed);
    let _ = writeln!(out, "  \"config\": {},", config_json(&doc.config));
    out.push_str("  \"records\": [");
    for (i, r) in doc.records.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        let _ = write!(
            out,
            "    {{\"seq\": {}, \"path_id\": {}, \"endpoint\": \"{}\", \
             \"x\": {}, \"y\": {}, \"z\": {}, \"dx\": {}, \"dy\": {}, \"dz\": {}, \
             \"lx\": {}, \"ly\": {}, \"lz\": {}, \"leg\": \"{}\", \"duration_s\": {}}}",
            r.seq,
            r.path_id,
            r.endpoint.as_str(),
            num(r.position.x),
            num(r.position.y),
            num(r.position.z),
            num(r.view_dir.x),
            num(r.view_dir.y),
            num(r.view_dir.z),
            num(r.motion_dir.x),
            num(r.motion_dir.y),
            num(r.motion_dir.z),
            r.leg.as_str(),
            num(r.duration_s),
        );
    }
    out.push_str(if doc.records.is_empty() {
        "]\n"
    } else {
        "\n  ]\n"
    });
    out.push_str("}\n");
    out
}

fn emit_csv(doc: &PlanDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {MAGIC}");
    out.push_str("# units: length=mm time=s\n");
    let _ = writeln!(out, "# seed: {}", doc.config.seed);
    let _ = writeln!(out, "# config: {}", config_json(&doc.config));
    let _ = writeln!(out, "{CSV_COLUMNS}");
    for r in &doc.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.seq,
            r.path_id,
            r.endpoint.as_str(),
            num(r.position.x),
            num(r.position.y),
            num(r.position.z),
            num(r.view_dir.x),
            num(r.view_dir.y),
            num(r.view_dir.z),
            num(r.motion_dir.x),
            num(r.motion_dir.y),
            num(r.motion_dir.z),
            r.leg.as_str(),
            num(r.duration_s),
        );
    }
    out
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonUnits {
    length: String,
    time: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonRecord {
    seq: usize,
    path_id: usize,
    endpoint: Endpoint,
    x: f64,
    y: f64,
    z: f64,
    dx: f64,
    dy: f64,
    dz: f64,
    lx: f64,
    ly: f64,
    lz: f64,
    leg: Leg,
    duration_s: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonPlan {
    format: String,
    units: JsonUnits,
    seed: u64,
    config: PlanConfig,
    records: Vec<JsonRecord>,
}

/// Reads either format; JSON is recognized by a leading `{`.
pub fn parse_plan(text: &str) -> Result<PlanDocument> {
    let doc = if text.trim_start().starts_with('{') {
        parse_json(text)?
    } else {
        parse_csv(text)?
    };
    doc.validate()?;
    Ok(doc)
}

fn parse_json(text: &str) -> Result<PlanDocument> {
    let plan: JsonPlan =
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    if plan.format != MAGIC {
        return Err(Error::InvalidPlan(format!("format tag {:?}", plan.format)));
    }
    if plan.units.length != "mm" || plan.units.time != "s" {
        return Err(Error::InvalidPlan("units must be mm and s".into()));
    }
    if plan.seed != plan.config.seed {
        return Err(Error::InvalidPlan("seed disagrees with config echo".into()));
    }
    let records = plan
        .records
        .into_iter()
        .map(|r| PlanRecord {
            seq: r.seq,
            path_id: r.path_id,
            endpoint: r.endpoint,
            position: Vec3::new(r.x, r.y, r.z),
            view_dir: Vec3::new(r.dx, r.dy, r.dz),
            motion_dir: Vec3::new(r.lx, r.ly, r.lz),
            leg: r.leg,
            duration_s: r.duration_s,
        })
        .collect();
    Ok(PlanDocument {
        config: plan.config,
        records,
    })
}

fn parse_csv(text: &str) -> Result<PlanDocument> {
    let mut magic = false;
    let mut seed = None;
    let mut config: Option<PlanConfig> = None;
    let mut header = false;
    let mut records = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if comment == MAGIC {
                magic = true;
            } else if let Some(v) = comment.strip_prefix("seed:") {
                seed = Some(
                    v.trim()
                        .parse::<u64>()
                        .map_err(|e| Error::parse(line_no, e.to_string()))?,
                );
            } else if let Some(v) = comment.strip_prefix("config:") {
                config = Some(
                    serde_json::from_str(v.trim())
                        .map_err(|e| Error::parse(line_no, e.to_string()))?,
                );
            } else if let Some(v) = comment.strip_prefix("units:") {
                if v.trim() != "length=mm time=s" {
                    return Err(Error::parse(line_no, "units must be length=mm time=s"));
                }
            }
            continue;
        }
        if !header {
            if line != CSV_COLUMNS {
                return Err(Error::parse(line_no, "expected the column header"));
            }
            header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 14 {
            return Err(Error::parse(
                line_no,
                format!("expected 14 fields, found {}", f.len()),
            ));
        }
        let int = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::parse(line_no, format!("{s:?}: {e}")))
        };
        let real = |i: usize| -> Result<f64> {
            f[i].parse::<f64>()
                .map_err(|e| Error::parse(line_no, format!("{:?}: {e}", f[i])))
        };
        let v3 = |i: usize| -> Result<Vec3> { Ok(Vec3::new(real(i)?, real(i + 1)?, real(i + 2)?)) };
        records.push(PlanRecord {
            seq: int(f[0])?,
            path_id: int(f[1])?,
            endpoint: f[2].parse().map_err(|e: String| Error::parse(line_no, e))?,
            position: v3(3)?,
            view_dir: v3(6)?,
            motion_dir: v3(9)?,
            leg: f[12]
                .parse()
                .map_err(|e: String| Error::parse(line_no, e))?,
            duration_s: real(13)?,
        });
    }
    if !magic {
        return Err(Error::InvalidPlan(format!("missing '# {MAGIC}' line")));
    }
    if !header {
        return Err(Error::InvalidPlan("missing column header".into()));
    }
    let config = config.ok_or_else(|| Error::InvalidPlan("missing config echo".into()))?;
    if seed != Some(config.seed) {
        return Err(Error::InvalidPlan(
            "seed missing or disagrees with config echo".into(),
        ));
    }
    Ok(PlanDocument { config, records })
}

pub fn write_plan(path: &Path, doc: &PlanDocument, format: PlanFormat) -> Result<()> {
    std::fs::write(path, emit_plan(doc, format)).map_err(|e| Error::io(path, e))
}

pub fn load_plan(path: &Path) -> Result<PlanDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_plan(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planner::{brute_force_tour, tour_cost};

    fn path(id: usize, a: Vec3, b: Vec3) -> LocalPath {
        let l = (b - a).normalize();
        let vp = |p: Vec3| Viewpoint {
            position: p,
            view_dir: -Vec3::z(),
            motion_dir: l,
            target: p - Vec3::z() * 300.0,
        };
        LocalPath {
            id,
            region: 0,
            slab: 0,
            start: vp(a),
            end: vp(b),
            scan_length: (b - a).norm(),
            lateral_width: 0.0,
            exceeds_fov: false,
        }
    }

    fn sample() -> (Vec<LocalPath>, Tour) {
        let paths = vec![
            path(1, Vec3::new(0.0, 0.0, 300.0), Vec3::new(100.0, 0.0, 300.0)),
            path(
                2,
                Vec3::new(0.0, 50.0, 300.0),
                Vec3::new(100.0, 50.0, 300.0),
            ),
            path(
                3,
                Vec3::new(0.0, 100.0, 310.0),
                Vec3::new(100.0, 100.0, 310.0),
            ),
        ];
        let tour = brute_force_tour(&paths, 50.0).unwrap();
        (paths, tour)
    }

    #[test]
    fn single_path_plan() {
        let paths = vec![path(1, Vec3::zeros(), Vec3::new(70.0, 0.0, 0.0))];
        let tour = tour_cost(&[1], &[Direction::Forward], &paths, 50.0).unwrap();
        let doc = PlanDocument::from_tour(&tour, &paths, &PlanConfig::default()).unwrap();
        assert_eq!(doc.records.len(), 2);
        assert_eq!(doc.records[1].leg, Leg::Scan);
        assert!((doc.records[1].duration_s - 1.4).abs() < 1e-12);
        let csv = emit_plan(&doc, PlanFormat::Csv);
        assert!(csv.contains("1,1,p*,70.000000,0.000000,0.000000,0.000000,0.000000,-1.000000,1.000000,0.000000,0.000000,scan,1.400000"));
    }

    #[test]
    fn round_trip_both_formats() {
        let (paths, tour) = sample();
        let cfg = PlanConfig {
            seed: 42,
            ..Default::default()
        };
        let doc = PlanDocument::from_tour(&tour, &paths, &cfg).unwrap();
        assert!(doc
            .records
            .iter()
            .any(|r| r.endpoint == Endpoint::End && r.leg == Leg::Transit));
        for format in [PlanFormat::Json, PlanFormat::Csv] {
            let text = emit_plan(&doc, format);
            let back = parse_plan(&text).unwrap();
            assert_eq!(back.config, cfg);
            assert_eq!(emit_plan(&back, format), text);
            let (order, dirs) = back.order_and_directions().unwrap();
            assert_eq!(order, tour.order);
            assert_eq!(dirs, tour.directions);
            let rebuilt = back.local_paths().unwrap();
            let again = tour_cost(&order, &dirs, &rebuilt, cfg.speed).unwrap();
            assert!((again.total_time - tour.total_time).abs() < 1e-9);
            for (p, q) in rebuilt.iter().zip(&paths) {
                assert!((p.start.motion_dir - q.start.motion_dir).norm() < 1e-9);
                assert!((p.end.position - q.end.position).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn structure_checked() {
        let (paths, tour) = sample();
        let doc = PlanDocument::from_tour(&tour, &paths, &PlanConfig::default()).unwrap();
        let mut split = doc.clone();
        split.records.swap(1, 2);
        split.records[1].seq = 1;
        split.records[2].seq = 2;
        assert!(matches!(split.validate(), Err(Error::InvalidPlan(_))));
        let mut odd = doc.clone();
        odd.records.pop();
        assert!(odd.validate().is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(parse_plan("").is_err());
        assert!(parse_plan("{}").is_err());
        assert!(matches!(
            parse_plan(&format!("# {MAGIC}\n{CSV_COLUMNS}\n0,1,p,1,2\n")),
            Err(Error::Parse { line: 3, .. })
        ));
        let (paths, tour) = sample();
        let doc = PlanDocument::from_tour(&tour, &paths, &PlanConfig::default()).unwrap();
        let text = emit_plan(&doc, PlanFormat::Csv).replace("# seed: 0", "# seed: 1");
        assert!(matches!(parse_plan(&text), Err(Error::InvalidPlan(_))));
    }
}
