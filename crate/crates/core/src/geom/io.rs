//! ASCII PLY and XYZ readers/writers.
//!
//! PLY output is `element vertex N` with `float` x/y/z properties written in
//! shortest round-trip decimal for `f32`. XYZ output is one `x y z` line per
//! point in shortest round-trip `f64` decimal. Both readers ignore labels;
//! provenance is not part of either format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::cloud::PointCloud;
use super::point::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Ply,
    Xyz,
}

impl CloudFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "ply" => Some(CloudFormat::Ply),
            "xyz" | "txt" => Some(CloudFormat::Xyz),
            _ => None,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::Ply => "ply",
            CloudFormat::Xyz => "xyz",
        }
    }
}

type LineError = (usize, String);

pub fn parse_xyz(text: &str) -> std::result::Result<Vec<Point3>, LineError> {
    let mut pts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        pts.push(parse_xyz_fields(line.split_whitespace(), i + 1)?);
    }
    Ok(pts)
}

fn parse_xyz_fields<'a>(
    mut fields: impl Iterator<Item = &'a str>,
    line: usize,
) -> std::result::Result<Point3, LineError> {
    let mut xyz = [0.0; 3];
    for (a, v) in xyz.iter_mut().enumerate() {
        let tok = fields
            .next()
            .ok_or_else(|| (line, format!("expected 3 coordinates, found {a}")))?;
        *v = tok
            .parse::<f64>()
            .map_err(|e| (line, format!("bad coordinate {tok:?}: {e}")))?;
        if !v.is_finite() {
            return Err((line, format!("non-finite coordinate {tok:?}")));
        }
    }
    Ok(Point3::from_array(xyz))
}

pub fn parse_ply(text: &str) -> std::result::Result<Vec<Point3>, LineError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err((1, "missing 'ply' magic".into())),
    }

    // Header: track the vertex element's property order and where it sits
    // among the elements.
    let mut elements: Vec<(String, usize, Vec<String>)> = Vec::new();
    let mut saw_format = false;
    loop {
        let (i, raw) = lines.next().ok_or((0, "unterminated header".to_string()))?;
        let mut tok = raw.split_whitespace();
        match tok.next() {
            Some("format") => {
                if tok.next() != Some("ascii") {
                    return Err((i + 1, "only ascii PLY is supported".into()));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") | None => {}
            Some("element") => {
                let name = tok.next().ok_or((i + 1, "element without name".to_string()))?;
                let count = tok
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or((i + 1, "element without count".to_string()))?;
                elements.push((name.to_string(), count, Vec::new()));
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or((i + 1, "property before element".to_string()))?;
                let name = raw.split_whitespace().last().unwrap_or_default();
                el.2.push(name.to_string());
            }
            Some("end_header") => break,
            Some(other) => return Err((i + 1, format!("unexpected header keyword {other:?}"))),
        }
    }
    if !saw_format {
        return Err((1, "missing format line".into()));
    }

    let mut pts = Vec::new();
    for (name, count, props) in &elements {
        if name != "vertex" {
            // Skip rows of elements we do not read.
            for _ in 0..*count {
                lines.next().ok_or((0, format!("truncated {name} element")))?;
            }
            continue;
        }
        let col = |axis: &str| {
            props
                .iter()
                .position(|p| p == axis)
                .ok_or((0, format!("vertex element lacks property {axis}")))
        };
        let cols = [col("x")?, col("y")?, col("z")?];
        pts.reserve(*count);
        for _ in 0..*count {
            let (i, raw) = lines
                .next()
                .ok_or((0, format!("expected {count} vertices, file ended early")))?;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.len() < props.len() {
                return Err((i + 1, format!("expected {} values", props.len())));
            }
            pts.push(parse_xyz_fields(cols.iter().map(|&c| fields[c]), i + 1)?);
        }
        break;
    }
    Ok(pts)
}

pub fn write_ply_string(cloud: &PointCloud) -> String {
    let mut s = String::with_capacity(64 + cloud.len() * 32);
    s.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(s, "element vertex {}", cloud.len());
    s.push_str("property float x\nproperty float y\nproperty float z\nend_header\n");
    for p in cloud.points() {
        let _ = writeln!(s, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
    }
    s
}

pub fn write_xyz_string(cloud: &PointCloud) -> String {
    let mut s = String::with_capacity(cloud.len() * 48);
    for p in cloud.points() {
        let _ = writeln!(s, "{} {} {}", p.x, p.y, p.z);
    }
    s
}

fn format_of(path: &Path) -> Result<CloudFormat> {
    CloudFormat::from_path(path).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: "unknown point cloud extension (expected .ply or .xyz)".into(),
    })
}

/// Reads a `.ply` or `.xyz` file, chosen by extension.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let format = format_of(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parsed = match format {
        CloudFormat::Ply => parse_ply(&text),
        CloudFormat::Xyz => parse_xyz(&text),
    };
    let pts = parsed.map_err(|(line, message)| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    })?;
    PointCloud::new(pts)
}

/// Writes a `.ply` or `.xyz` file, chosen by extension. Parent directories
/// are created as needed.
pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let body = match format_of(path)? {
        CloudFormat::Ply => write_ply_string(cloud),
        CloudFormat::Xyz => write_xyz_string(cloud),
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))
}
