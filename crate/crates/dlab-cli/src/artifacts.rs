//! Artifact files: CSV and JSON writers plus the per-run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use dlab_core::performance::GapSeries;
use dlab_core::separatrix::{BasinCells, BasinGrid, BasinLabel, Separatrix};
use dlab_core::Trajectory;
use serde::Serialize;

use crate::CliError;

/// Output directory for one run, created on construction.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::Io {
            context: format!("create {}", root.display()),
            source: e,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn subdir(&self, name: &str) -> Result<Self, CliError> {
        Self::create(&self.root.join(name))
    }

    pub fn write_text(&self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io {
            context: format!("write {}", path.display()),
            source: e,
        })
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Data(format!("serialize {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }
}

/// Render `x` with 12 significant digits in plain decimal notation.
///
/// Values are grid coordinates and solver output in roughly `[-1e4, 1e4]`,
/// so fixed-point with a magnitude-dependent digit count stays exact enough
/// for byte-identical reruns while avoiding exponent notation in the CSVs.
pub fn sig12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,theta,p\n");
    for (t, state) in traj.iter() {
        out.push_str(&sig12(t));
        out.push(',');
        out.push_str(&sig12(state.theta));
        out.push(',');
        out.push_str(&sig12(state.p));
        out.push('\n');
    }
    out
}

pub fn separatrix_csv(sep: &Separatrix) -> String {
    let mut out = String::from("theta,p\n");
    for node in &sep.nodes {
        out.push_str(&sig12(node.theta));
        out.push(',');
        out.push_str(&sig12(node.p));
        out.push('\n');
    }
    out
}

pub fn gap_csv(series: &GapSeries) -> String {
    let mut out = String::from("t,gap\n");
    for (t, gap) in series.times.iter().zip(&series.gap) {
        out.push_str(&sig12(*t));
        out.push(',');
        out.push_str(&sig12(*gap));
        out.push('\n');
    }
    out
}

fn basin_label_str(label: BasinLabel) -> &'static str {
    match label {
        BasinLabel::High => "High",
        BasinLabel::Low => "Low",
        BasinLabel::Boundary => "Boundary",
    }
}

/// Bare matrix, one row per `theta` axis entry, one column per `p` entry.
pub fn basin_matrix_csv(grid: &BasinGrid) -> String {
    let mut out = String::new();
    match &grid.cells {
        BasinCells::Labels(rows) => {
            for row in rows {
                let line: Vec<&str> = row.iter().map(|&label| basin_label_str(label)).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
        BasinCells::Probabilities(rows) => {
            for row in rows {
                let line: Vec<String> = row.iter().map(|p| sig12(*p)).collect();
                out.push_str(&line.join(","));
                out.push('\n');
            }
        }
    }
    out
}

/// Record of one invocation, written beside the artifacts it lists.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub outputs: Vec<String>,
    pub wall_time_secs: f64,
}
