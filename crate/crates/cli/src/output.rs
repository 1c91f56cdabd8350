//! CSV tables with a `#` metadata header, and reproducibility sidecars.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, RunInfo};
use crate::error::CliResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A rectangular table of numbers plus free-form metadata lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    /// `None` renders as an empty field (an indeterminate value).
    pub rows: Vec<Vec<Option<f64>>>,
    /// `key = value` lines added to the header.
    pub notes: Vec<(String, String)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.push_optional(row.into_iter().map(Some).collect());
    }

    pub fn push_optional(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.notes.push((key.to_string(), value.to_string()));
    }

    /// Render with the metadata header. Numbers use the shortest
    /// round-tripping representation, so the text is a pure function of
    /// the values.
    pub fn render(&self, command: &str, config: &RunConfig) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# casimir-dyn {VERSION} {command}");
        let _ = writeln!(out, "# config_sha256 = {}", config.hash());
        let _ = writeln!(out, "# seed = {}", config.seed);
        for (k, v) in &self.notes {
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                first = false;
                if let Some(v) = v {
                    let _ = write!(out, "{v:e}");
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Paths written by one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub csv: PathBuf,
    pub sidecar: PathBuf,
}

/// Write `<out>/<stem>.csv` and `<out>/<stem>.sidecar.toml`. The sidecar
/// is the full resolved configuration plus a `[run]` section and loads
/// back with `--config`.
pub fn write_outputs(out: &Path, stem: &str, command: &str, table: &Table, config: &RunConfig) -> CliResult<Written> {
    fs::create_dir_all(out)?;
    let csv = out.join(format!("{stem}.csv"));
    let sidecar = out.join(format!("{stem}.sidecar.toml"));
    fs::write(&csv, table.render(command, config))?;
    let mut with_run = config.clone();
    with_run.run = Some(RunInfo {
        command: command.to_string(),
        version: VERSION.to_string(),
    });
    let text = toml::to_string(&with_run).expect("configuration serializes");
    fs::write(&sidecar, text)?;
    Ok(Written { csv, sidecar })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_carries_hash_and_seed_and_missing_values_are_blank() {
        let mut t = Table::new(&["a_s", "b_m"]);
        t.push(vec![1.0, 2.5e-9]);
        t.push_optional(vec![Some(3.0), None]);
        let config = RunConfig {
            seed: 42,
            ..RunConfig::default()
        };
        let text = t.render("loop", &config);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("# config_sha256 = "));
        assert_eq!(lines[2], "# seed = 42");
        assert_eq!(lines[3], "a_s,b_m");
        assert_eq!(lines[4], "1e0,2.5e-9");
        assert_eq!(lines[5], "3e0,");
    }
}
