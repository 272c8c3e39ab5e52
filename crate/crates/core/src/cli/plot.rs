//! Standalone matplotlib scripts for result files.
//!
//! The script reads the data at run time, so its bytes depend only on the
//! result file's name and the plot kind.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::output::parse_result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Populations and Im ρ13 against time.
    Trajectory,
    /// Transmission against probe detuning.
    Spectrum,
}

impl PlotKind {
    fn required_columns(self) -> &'static [&'static str] {
        match self {
            PlotKind::Trajectory => &["t_s", "re_rho11", "re_rho22", "re_rho33", "re_rho44", "im_rho13"],
            PlotKind::Spectrum => &["detuning_radps", "transmission"],
        }
    }
}

impl FromStr for PlotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "trajectory" => Ok(PlotKind::Trajectory),
            "spectrum" => Ok(PlotKind::Spectrum),
            other => Err(format!("unknown plot kind `{other}`; expected trajectory or spectrum")),
        }
    }
}

impl fmt::Display for PlotKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PlotKind::Trajectory => "trajectory",
            PlotKind::Spectrum => "spectrum",
        })
    }
}

/// Where the script for `result_path` is written: `<stem>.plot.py` alongside it.
pub fn script_path(result_path: &Path) -> PathBuf {
    result_path.with_extension("plot.py")
}

const LOADER: &str = r##"import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load(path):
    text = path.read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = doc["rows"]
        return {name: [row[i] for row in rows] for i, name in enumerate(doc["columns"])}
    lines = [line for line in text.splitlines() if line.strip() and not line.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    columns = {name: [] for name in header}
    for row in reader:
        for name, value in zip(header, row):
            columns[name].append(float(value))
    return columns

"##;

const TRAJECTORY: &str = r#"
data = load(DATA)
t_us = [t * 1e6 for t in data["t_s"]]
fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
for k in range(1, 5):
    top.plot(t_us, data[f"re_rho{k}{k}"], label=f"rho{k}{k}")
top.set_ylabel("population")
top.legend()
bottom.plot(t_us, data["im_rho13"], color="black")
bottom.axhline(0.0, color="gray", linewidth=0.8)
bottom.set_ylabel("Im rho13")
bottom.set_xlabel("time (us)")
fig.tight_layout()
fig.savefig(DATA.with_suffix(".png"), dpi=150)
"#;

const SPECTRUM: &str = r#"
data = load(DATA)
detuning_ghz = [d / (2.0 * math.pi * 1e9) for d in data["detuning_radps"]]
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(detuning_ghz, data["transmission"], color="tab:blue")
ax.axhline(1.0, color="gray", linestyle="--", linewidth=0.8)
ax.set_xlabel("probe detuning / 2pi (GHz)")
ax.set_ylabel("transmission")
fig.tight_layout()
fig.savefig(DATA.with_suffix(".png"), dpi=150)
"#;

/// Script text for a result file called `file_name`.
pub fn script_text(file_name: &str, kind: PlotKind) -> String {
    let literal = serde_json::to_string(file_name).expect("strings always serialize");
    let body = match kind {
        PlotKind::Trajectory => TRAJECTORY,
        PlotKind::Spectrum => SPECTRUM,
    };
    format!(
        "#!/usr/bin/env python3\n# {kind} plot written by owi-sim\n{LOADER}\nDATA = Path(__file__).resolve().parent / {literal}\n{body}"
    )
}

/// Checks that `result_path` holds a result with the columns `kind` needs and
/// writes the plotting script next to it.
pub fn emit_plot_script(result_path: &Path, kind: PlotKind) -> Result<PathBuf, String> {
    let text = std::fs::read_to_string(result_path)
        .map_err(|e| format!("cannot read result file {}: {e}", result_path.display()))?;
    let table = parse_result(&text).map_err(|e| format!("{}: {e}", result_path.display()))?;
    for column in kind.required_columns() {
        if !table.columns.iter().any(|c| c == column) {
            return Err(format!("{}: no `{column}` column for a {kind} plot", result_path.display()));
        }
    }
    let file_name = result_path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| format!("{}: result path has no usable file name", result_path.display()))?;
    let script = script_path(result_path);
    std::fs::write(&script, script_text(file_name, kind))
        .map_err(|e| format!("cannot write {}: {e}", script.display()))?;
    Ok(script)
}
