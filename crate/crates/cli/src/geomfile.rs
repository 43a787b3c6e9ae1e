//! Geometry descriptor files: one `name=` line plus one `mic=x y z` line
//! per microphone (coordinates in meters); `#` starts a comment.

use std::path::Path;

use anyhow::{bail, Context, Result};
use beamsep_core::ArrayGeometry;

pub fn format_geometry(geometry: &ArrayGeometry) -> String {
    let mut out = format!("name={}\n", geometry.name());
    for p in geometry.mic_positions() {
        out.push_str(&format!("mic={} {} {}\n", p[0], p[1], p[2]));
    }
    out
}

pub fn parse_geometry(text: &str) -> Result<ArrayGeometry> {
    let mut name: Option<String> = None;
    let mut mics = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .with_context(|| format!("line {}: expected key=value", idx + 1))?;
        match key.trim() {
            "name" => name = Some(value.trim().to_string()),
            "mic" => {
                let coords: Vec<f64> = value
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .with_context(|| format!("line {}: bad coordinate", idx + 1))?;
                if coords.len() != 3 {
                    bail!("line {}: mic needs exactly 3 coordinates", idx + 1);
                }
                mics.push([coords[0], coords[1], coords[2]]);
            }
            other => bail!("line {}: unknown key '{other}'", idx + 1),
        }
    }
    let name = name.context("geometry file has no name= line")?;
    Ok(ArrayGeometry::new(name, mics)?)
}

pub fn write_geometry(path: &Path, geometry: &ArrayGeometry) -> Result<()> {
    std::fs::write(path, format_geometry(geometry))
        .with_context(|| format!("write {}", path.display()))
}

pub fn read_geometry(path: &Path) -> Result<ArrayGeometry> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("read {}", path.display()))?;
    parse_geometry(&text).with_context(|| format!("parse {}", path.display()))
}

/// A geometry argument: a preset name (`respeaker`, `kinect`, `16sounds`)
/// or `file:PATH` pointing at a descriptor file.
pub fn resolve_geometry(arg: &str) -> Result<ArrayGeometry> {
    if let Some(path) = arg.strip_prefix("file:") {
        return read_geometry(Path::new(path));
    }
    ArrayGeometry::preset(arg).with_context(|| {
        format!("unknown geometry '{arg}' (respeaker | kinect | 16sounds | file:PATH)")
    })
}
