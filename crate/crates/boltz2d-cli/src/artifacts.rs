//! Artifact writing: atomic write-then-rename, CSV with RFC-4180-style
//! quoting and 17-significant-digit floats, JSON with the resolved config
//! embedded.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::CliResult;

/// Floats are serialized with 17 significant digits, enough to round-trip
/// any f64 exactly.
pub fn format_float(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        // Keep small integers readable (times, counts).
        format!("{x:.1}")
    } else {
        format!("{x:.16e}")
    }
}

/// Quotes a CSV field when it contains a comma, quote, or newline.
pub fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A CSV artifact: a `# config` comment line carrying the resolved run
/// configuration, a header row, then data rows.
pub struct CsvArtifact {
    lines: Vec<String>,
}

impl CsvArtifact {
    pub fn new(config: &RunConfig, header: &[&str]) -> Self {
        let meta = serde_json::to_string(config).expect("config serializes");
        let lines = vec![
            format!("# config {meta}"),
            header.iter().map(|h| csv_field(h)).collect::<Vec<_>>().join(","),
        ];
        CsvArtifact { lines }
    }

    pub fn push_row(&mut self, fields: &[String]) {
        self.lines
            .push(fields.iter().map(|f| csv_field(f)).collect::<Vec<_>>().join(","));
    }

    pub fn contents(&self) -> String {
        let mut s = self.lines.join("\r\n");
        s.push_str("\r\n");
        s
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, self.contents().as_bytes())
    }
}

/// Serializes a report (with embedded config) as pretty JSON; key order is
/// the struct declaration order, which keeps outputs stable.
pub fn write_json<T: Serialize>(path: &Path, report: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(report)
        .map_err(|e| crate::CliError::Config(format!("serialize: {e}")))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Writes to a sibling temp file then renames, so interrupted runs never
/// leave a partially written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = PathBuf::from(path);
    let file_name = tmp
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "artifact".into());
    tmp.set_file_name(format!(".{file_name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
