//! Metric report records: one line per evaluation, space-separated
//! `key=value` pairs, diff-friendly for regression checks.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use beamsep_core::MetricReport;

pub fn format_report(report: &MetricReport) -> String {
    match report.si_sdri {
        Some(i) => format!(
            "scene={} si_sdr={:.6} si_sdri={:.6}",
            report.scene_id, report.si_sdr, i
        ),
        None => format!("scene={} si_sdr={:.6}", report.scene_id, report.si_sdr),
    }
}

pub fn append_report(path: &Path, line: &str) -> Result<()> {
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("open {}", path.display()))?;
    writeln!(file, "{line}").with_context(|| format!("write {}", path.display()))
}

pub fn scene_id_from(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into())
}
