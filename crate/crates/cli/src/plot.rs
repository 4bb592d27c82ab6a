//! Emits a self-contained matplotlib script per record CSV: an error panel
//! (with the bounds for discrete runs, the relative error for continuous
//! ones) and one panel per tracked mode.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;

use crate::error::CliError;
use crate::io::{Table, MODE_COLUMNS, RECORD_COLUMNS};

/// What a record file contains, as far as plotting is concerned.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub continuous: bool,
    pub modes: usize,
}

impl Layout {
    pub fn panels(&self) -> usize {
        1 + self.modes
    }
}

pub fn layout(t: &Table) -> Result<Layout, CliError> {
    let cols: Vec<&str> = t.columns.iter().map(String::as_str).collect();
    if cols.len() < RECORD_COLUMNS.len() || cols[..RECORD_COLUMNS.len()] != RECORD_COLUMNS {
        return Err(CliError::schema(&t.path, format!("not a record file: columns {cols:?}")));
    }
    let mut rest = &cols[RECORD_COLUMNS.len()..];
    let continuous = rest.first() == Some(&"rel_err_l2");
    if continuous {
        rest = &rest[1..];
    }
    if !rest.len().is_multiple_of(MODE_COLUMNS.len()) {
        return Err(CliError::schema(&t.path, "incomplete tracked-mode column group"));
    }
    let modes = rest.len() / MODE_COLUMNS.len();
    for (m, group) in rest.chunks(MODE_COLUMNS.len()).enumerate() {
        for (c, base) in group.iter().zip(MODE_COLUMNS) {
            if *c != format!("{base}_m{m}") {
                return Err(CliError::schema(&t.path, format!("expected column {base}_m{m}, found {c}")));
            }
        }
    }
    Ok(Layout { continuous, modes })
}

fn script(csv_name: &str, body: &str, layout: &Layout, png: &str) -> String {
    let panels = layout.panels();
    let ncols = if panels == 1 { 1 } else { 2 };
    let nrows = panels.div_ceil(ncols);
    let mut s = String::new();
    let _ = write!(
        s,
        r#"# Generated by nse3dvar plot from {csv_name}; run with python3.
import csv
import io

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

DATA = """{body}"""

rows = list(csv.DictReader(io.StringIO(DATA)))


def col(name):
    return [float(r[name]) if r[name] != "" else None for r in rows]


def pairs(xs, ys):
    kept = [(x, y) for x, y in zip(xs, ys) if y is not None]
    return [p[0] for p in kept], [p[1] for p in kept]


t = col("time")
fig, axes = plt.subplots({nrows}, {ncols}, figsize=({w}, {h}), squeeze=False)
axes = [a for row in axes for a in row]
ax = axes[0]
"#,
        w = 6 * ncols,
        h = 4 * nrows,
    );
    if layout.continuous {
        s.push_str(
            r#"ax.semilogy(*pairs(t, col("rel_err_l2")), "k-", label="relative error")
ax.set_ylabel("|m - u| / |u|")
"#,
        );
    } else {
        s.push_str(
            r#"ax.semilogy(*pairs(t, col("err_sq_H0")), "k-", label="|m - u|^2")
ax.semilogy(*pairs(t, col("upper_bound")), "r--", label="upper bound")
ax.semilogy(*pairs(t, col("lower_bound")), "b:", label="lower bound")
ax.set_ylabel("squared error")
"#,
        );
    }
    s.push_str("ax.set_xlabel(\"t\")\nax.legend()\n");
    for m in 0..layout.modes {
        let _ = write!(
            s,
            r#"
ax = axes[{p}]
k = (int(rows[0]["k1_m{m}"]), int(rows[0]["k2_m{m}"]))
ax.plot(*pairs(t, col("truth_re_m{m}")), "k-", label="signal u")
ax.plot(*pairs(t, col("est_re_m{m}")), "r-", label="estimate m")
ax.plot(*pairs(t, col("obs_re_m{m}")), "g.", markersize=3, label="observation y")
ax.set_title("Re mode k=(%d,%d)" % k)
ax.set_xlabel("t")
ax.legend()
"#,
            p = m + 1,
        );
    }
    for p in panels..nrows * ncols {
        let _ = writeln!(s, "axes[{p}].axis(\"off\")");
    }
    let _ = write!(s, "\nfig.tight_layout()\nfig.savefig(\"{png}\", dpi=120)\n");
    s
}

/// Writes `<out>/<stem>_plot.py` for `csv` and, if `render`, runs it to
/// produce `<out>/<stem>.png`.
pub fn emit(csv: &Path, out: &Path, render: bool) -> Result<Vec<PathBuf>, CliError> {
    let t = Table::read(csv)?;
    let layout = layout(&t)?;
    let text = std::fs::read_to_string(csv).map_err(CliError::io(csv))?;
    let body: String = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .flat_map(|l| [l, "\n"])
        .collect();
    let stem = csv
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| CliError::schema(csv, "file name is not valid UTF-8"))?;
    let png = format!("{stem}.png");
    let name = csv.file_name().and_then(|s| s.to_str()).unwrap_or(stem);
    std::fs::create_dir_all(out).map_err(CliError::io(out))?;
    let script_path = out.join(format!("{stem}_plot.py"));
    std::fs::write(&script_path, script(name, &body, &layout, &png)).map_err(CliError::io(&script_path))?;
    let mut written = vec![script_path.clone()];
    if render {
        let status = Command::new("python3")
            .arg(script_path.file_name().unwrap())
            .current_dir(out)
            .status()
            .map_err(|e| CliError::Render {
                script: script_path.clone(),
                reason: e.to_string(),
            })?;
        if !status.success() {
            return Err(CliError::Render {
                script: script_path,
                reason: format!("python3 exited with {status}"),
            });
        }
        written.push(out.join(png));
    }
    Ok(written)
}
