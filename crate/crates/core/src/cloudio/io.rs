use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

use super::{CloudSource, PointCloud, TriangleMesh};

/// On-disk point-cloud formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    /// ASCII PLY with a `vertex` element carrying `x`, `y`, `z`.
    PlyAscii,
    /// One `x,y,z` triple per line.
    XyzCsv,
}

impl CloudFormat {
    pub fn from_extension(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "ply" => Some(CloudFormat::PlyAscii),
            "xyz" | "csv" | "txt" => Some(CloudFormat::XyzCsv),
            _ => None,
        }
    }
}

pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cloud = match format {
        CloudFormat::PlyAscii => parse_ply(&text)?,
        CloudFormat::XyzCsv => parse_xyz(&text)?,
    };
    cloud.source = Some(CloudSource {
        path: Some(path.to_path_buf()),
        sample_count: None,
    });
    Ok(cloud)
}

pub fn save_cloud(path: &Path, cloud: &PointCloud, format: CloudFormat) -> Result<()> {
    let text = match format {
        CloudFormat::PlyAscii => write_ply(cloud),
        CloudFormat::XyzCsv => write_xyz(cloud),
    };
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_coord(token: &str, line: usize) -> Result<f64> {
    let v: f64 = token
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("not a number: {token:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(
            line,
            format!("non-finite coordinate: {token:?}"),
        ));
    }
    Ok(v)
}

/// Parses `x,y,z` lines. Blank lines and `#` comments are skipped.
pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = s.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::parse(
                line,
                format!("expected 3 comma-separated values, found {}", fields.len()),
            ));
        }
        points.push(Vec3::new(
            parse_coord(fields[0], line)?,
            parse_coord(fields[1], line)?,
            parse_coord(fields[2], line)?,
        ));
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(PointCloud::new(points))
}

pub fn write_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 32);
    for p in &cloud.points {
        let _ = writeln!(out, "{},{},{}", p.x, p.y, p.z);
    }
    out
}

#[derive(Debug)]
enum PlyProperty {
    Scalar(String),
    List,
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

const PLY_SCALAR_TYPES: &[&str] = &[
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8", "int16",
    "uint16", "int32", "uint32", "float32", "float64",
];

/// Parses an ASCII PLY file, returning the `vertex` positions. Other
/// elements (faces, edges) are skipped. Optional normals are accepted.
pub fn parse_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        Some((n, _)) => return Err(Error::parse(n, "missing 'ply' magic")),
        None => return Err(Error::EmptyCloud),
    }

    let mut elements: Vec<PlyElement> = Vec::new();
    let mut saw_format = false;
    loop {
        let Some((n, raw)) = lines.next() else {
            return Err(Error::parse(
                text.lines().count(),
                "header not terminated by end_header",
            ));
        };
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        match tokens.as_slice() {
            [] => continue,
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] => continue,
            ["format", "ascii", _] => saw_format = true,
            ["format", other, ..] => {
                return Err(Error::parse(n, format!("unsupported PLY format '{other}'")))
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(n, format!("bad element count {count:?}")))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", _, _, _] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(n, "property before any element"))?;
                el.properties.push(PlyProperty::List);
            }
            ["property", ty, name] => {
                if !PLY_SCALAR_TYPES.contains(ty) {
                    return Err(Error::parse(n, format!("unknown property type {ty:?}")));
                }
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(n, "property before any element"))?;
                el.properties.push(PlyProperty::Scalar(name.to_string()));
            }
            _ => return Err(Error::parse(n, format!("unrecognized header line {raw:?}"))),
        }
    }
    if !saw_format {
        return Err(Error::parse(1, "missing 'format ascii 1.0' line"));
    }

    let mut points = Vec::new();
    let mut found_vertex = false;
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                if lines.next().is_none() {
                    return Err(Error::parse(
                        text.lines().count(),
                        format!("truncated '{}' element", el.name),
                    ));
                }
            }
            continue;
        }
        found_vertex = true;
        let mut slot = [None; 3];
        for (pi, prop) in el.properties.iter().enumerate() {
            match prop {
                PlyProperty::List => {
                    return Err(Error::parse(
                        0,
                        "list properties on vertex are not supported",
                    ))
                }
                PlyProperty::Scalar(name) => match name.as_str() {
                    "x" => slot[0] = Some(pi),
                    "y" => slot[1] = Some(pi),
                    "z" => slot[2] = Some(pi),
                    _ => {}
                },
            }
        }
        let [Some(ix), Some(iy), Some(iz)] = slot else {
            return Err(Error::parse(0, "vertex element lacks x, y or z"));
        };
        points.reserve(el.count.min(1 << 24));
        for _ in 0..el.count {
            let Some((n, raw)) = lines.next() else {
                return Err(Error::parse(
                    text.lines().count(),
                    "fewer vertex rows than declared",
                ));
            };
            let tokens: Vec<&str> = raw.split_whitespace().collect();
            if tokens.len() != el.properties.len() {
                return Err(Error::parse(
                    n,
                    format!(
                        "expected {} values, found {}",
                        el.properties.len(),
                        tokens.len()
                    ),
                ));
            }
            for t in &tokens {
                parse_coord(t, n)?;
            }
            points.push(Vec3::new(
                parse_coord(tokens[ix], n)?,
                parse_coord(tokens[iy], n)?,
                parse_coord(tokens[iz], n)?,
            ));
        }
    }
    if !found_vertex {
        return Err(Error::parse(0, "no vertex element"));
    }
    if points.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(PointCloud::new(points))
}

pub fn write_ply(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 32 + 128);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in &cloud.points {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    out
}

/// Deterministic, well-separated RGB color for a label.
pub(crate) fn label_color(label: usize) -> [u8; 3] {
    // golden-angle hue walk
    let hue = (label as f64 * 137.507_764) % 360.0;
    let (s, v) = (0.75, 0.95);
    let c = v * s;
    let x = c * (1.0 - ((hue / 60.0) % 2.0 - 1.0).abs());
    let m = v - c;
    let (r, g, b) = match (hue / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r, g, b].map(|u| ((u + m) * 255.0).round() as u8)
}

/// ASCII PLY with an integer `label` and RGB color per vertex. Points
/// without a label (`None`) get label -1 and grey.
pub fn write_labeled_ply(points: &[Vec3], labels: &[Option<usize>]) -> String {
    assert_eq!(points.len(), labels.len());
    let mut out = String::with_capacity(points.len() * 48 + 256);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", points.len());
    out.push_str(
        "property double x\nproperty double y\nproperty double z\nproperty int label\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n",
    );
    for (p, l) in points.iter().zip(labels) {
        let (label, [r, g, b]) = match l {
            Some(l) => (*l as i64, label_color(*l)),
            None => (-1, [128, 128, 128]),
        };
        let _ = writeln!(out, "{} {} {} {label} {r} {g} {b}", p.x, p.y, p.z);
    }
    out
}

const STL_HEADER_LEN: usize = 80;
const STL_TRIANGLE_LEN: usize = 50;

/// Parses a binary STL. Vertices are not welded: each facet contributes
/// three vertices.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh> {
    if bytes.len() < STL_HEADER_LEN + 4 {
        return Err(Error::parse(
            0,
            "binary STL shorter than its 84-byte preamble",
        ));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let body = &bytes[84..];
    if count.checked_mul(STL_TRIANGLE_LEN) != Some(body.len()) {
        return Err(Error::parse(
            0,
            format!(
                "STL declares {count} facets but body holds {} bytes",
                body.len()
            ),
        ));
    }
    let mut mesh = TriangleMesh {
        vertices: Vec::with_capacity(count * 3),
        triangles: Vec::with_capacity(count),
    };
    for (t, facet) in body.chunks_exact(STL_TRIANGLE_LEN).enumerate() {
        let f = |o: usize| f32::from_le_bytes(facet[o..o + 4].try_into().unwrap()) as f64;
        for v in 0..3 {
            let o = 12 + v * 12;
            let p = Vec3::new(f(o), f(o + 4), f(o + 8));
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::parse(t + 1, "non-finite vertex coordinate in facet"));
            }
            mesh.vertices.push(p);
        }
        mesh.triangles.push([3 * t, 3 * t + 1, 3 * t + 2]);
    }
    Ok(mesh)
}

pub fn load_stl(path: &Path) -> Result<TriangleMesh> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_stl(&bytes)
}

pub fn write_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = Vec::with_capacity(84 + mesh.triangles.len() * STL_TRIANGLE_LEN);
    let mut header = [0u8; STL_HEADER_LEN];
    let tag = b"binary STL";
    header[..tag.len()].copy_from_slice(tag);
    out.extend_from_slice(&header);
    out.extend_from_slice(&(mesh.triangles.len() as u32).to_le_bytes());
    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| mesh.vertices[i]);
        let n = (b - a).cross(&(c - a));
        let n = if n.norm() > 0.0 { n.normalize() } else { n };
        for v in [n, a, b, c] {
            for k in 0..3 {
                out.extend_from_slice(&(v[k] as f32).to_le_bytes());
            }
        }
        out.extend_from_slice(&[0, 0]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xyz_three_points() {
        let c = parse_xyz("0,0,0\n1,0,0\n0,1,0\n").unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.points[1], Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn xyz_missing_z_reports_line() {
        let err = parse_xyz("0,0,0\n1,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn xyz_rejects_nan_and_garbage() {
        assert!(matches!(
            parse_xyz("1,2,nan"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_xyz("\n\n1,b,3"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse_xyz(""), Err(Error::EmptyCloud)));
        assert!(matches!(
            parse_xyz("# only a comment\n"),
            Err(Error::EmptyCloud)
        ));
        assert!(matches!(parse_ply(""), Err(Error::EmptyCloud)));
        let no_vertices = "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\n\
                           property float y\nproperty float z\nend_header\n";
        assert!(matches!(parse_ply(no_vertices), Err(Error::EmptyCloud)));
    }

    #[test]
    fn ply_with_normals_and_faces() {
        let text = "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 3\n\
                    property float x\nproperty float y\nproperty float z\n\
                    property float nx\nproperty float ny\nproperty float nz\n\
                    element face 1\nproperty list uchar int vertex_indices\nend_header\n\
                    0 0 0 0 0 1\n1 0 0 0 0 1\n0 1 0 0 0 1\n3 0 1 2\n";
        let c = parse_ply(text).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.points[2], Vec3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn ply_short_row_reports_line() {
        let text = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\n\
                    property float y\nproperty float z\nend_header\n0 0 0\n1 2\n";
        assert!(matches!(parse_ply(text), Err(Error::Parse { line: 9, .. })));
    }

    #[test]
    fn ply_binary_rejected() {
        let text = "ply\nformat binary_little_endian 1.0\nend_header\n";
        assert!(matches!(parse_ply(text), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn ply_round_trip_is_bit_identical() {
        let points: Vec<Vec3> = (0..1000)
            .map(|i| {
                let t = i as f64 * 0.731;
                Vec3::new(t.sin() * 123.456789, t.cos() * 1e-7, t * 1.000000001)
            })
            .collect();
        let cloud = PointCloud::new(points);
        let text = write_ply(&cloud);
        let back = parse_ply(&text).unwrap();
        assert_eq!(back.points, cloud.points);
        assert_eq!(write_ply(&back), text);
    }

    #[test]
    fn stl_round_trip() {
        let mesh = TriangleMesh {
            vertices: vec![Vec3::zeros(), Vec3::x(), Vec3::y()],
            triangles: vec![[0, 1, 2]],
        };
        let bytes = write_stl(&mesh);
        assert_eq!(bytes.len(), 84 + 50);
        let back = parse_stl(&bytes).unwrap();
        assert_eq!(back, mesh);
    }

    #[test]
    fn stl_length_mismatch() {
        let mut bytes = vec![0u8; 84];
        bytes[80] = 2;
        assert!(matches!(parse_stl(&bytes), Err(Error::Parse { .. })));
        assert!(parse_stl(&bytes[..10]).is_err());
    }

    #[test]
    fn labeled_ply_parses_back() {
        let pts = vec![Vec3::zeros(), Vec3::x()];
        let text = write_labeled_ply(&pts, &[Some(3), None]);
        assert!(text.contains("0 0 0 3 "));
        assert!(text.contains("1 0 0 -1 128 128 128"));
        assert_eq!(parse_ply(&text).unwrap().points, pts);
    }
}
