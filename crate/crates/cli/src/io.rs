//! File formats. Every file starts with `# key=value` comment lines holding
//! the library version, the producing command and the fully resolved
//! configuration, followed by a comma-separated table with a header row.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a
//! file back reproduces the values bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nse3dvar_core::field::{FieldKind, SpectralField};
use nse3dvar_core::filter::StepRecord;
use nse3dvar_core::grid::WavenumberGrid;
use nse3dvar_core::observations::Observation;
use nse3dvar_core::Complex64;

use crate::config::Config;
use crate::error::CliError;

pub const TRUTH_FILE: &str = "truth.csv";
pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const FILTER_FILE: &str = "filter.csv";
pub const BOUNDS_FILE: &str = "bounds.csv";

pub const RECORD_COLUMNS: [&str; 6] = ["step", "time", "err_sq_H0", "err_H1", "lower_bound", "upper_bound"];
pub const MODE_COLUMNS: [&str; 8] = ["k1", "k2", "truth_re", "truth_im", "est_re", "est_im", "obs_re", "obs_im"];
const FIELD_COLUMNS: [&str; 6] = ["step", "time", "k1", "k2", "re", "im"];
const OBS_COLUMNS: [&str; 8] = ["step", "time", "k1", "k2", "y_re", "y_im", "xi_re", "xi_im"];

/// Output file with the standard comment header already written.
pub struct Output {
    path: PathBuf,
    csv: csv::Writer<BufWriter<File>>,
}

impl Output {
    pub fn create(path: &Path, command: &str, cfg: &Config, extra: &[(&str, String)]) -> Result<Self, CliError> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        let file = File::create(path).map_err(CliError::io(path))?;
        let mut w = BufWriter::new(file);
        let mut head = format!("# nse3dvar-core={}\n# command={command}\n", nse3dvar_core::VERSION);
        for (k, v) in cfg.entries().iter().chain(extra) {
            head.push_str(&format!("# {k}={v}\n"));
        }
        w.write_all(head.as_bytes()).map_err(CliError::io(path))?;
        let csv = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        Ok(Self {
            path: path.to_path_buf(),
            csv,
        })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.csv.write_record(fields).map_err(|e| csv_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, CliError> {
        self.csv.flush().map_err(CliError::io(&self.path))?;
        Ok(self.path)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => CliError::schema(path, format!("{other:?}")),
    }
}

pub fn num(x: f64) -> String {
    x.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// A parsed input table: header metadata, column names and string rows.
pub struct Table {
    pub path: PathBuf,
    pub meta: BTreeMap<String, String>,
    pub columns: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut meta = BTreeMap::new();
        for line in text.lines().take_while(|l| l.starts_with('#')) {
            if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
                meta.insert(k.to_string(), v.to_string());
            }
        }
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let columns = rdr
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = rdr
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| csv_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            meta,
            columns,
            rows,
        })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    fn expect_columns(&self, expected: &[&str]) -> Result<(), CliError> {
        if self.columns.iter().map(String::as_str).ne(expected.iter().copied()) {
            return Err(CliError::schema(
                &self.path,
                format!("expected columns {expected:?}, found {:?}", self.columns),
            ));
        }
        Ok(())
    }

    /// Fails unless the file was produced on `grid`.
    fn expect_grid(&self, grid: &WavenumberGrid) -> Result<(), CliError> {
        let n = self.meta.get("n").and_then(|v| v.parse::<usize>().ok());
        let l = self.meta.get("L").and_then(|v| v.parse::<f64>().ok());
        if n != Some(grid.n()) || l != Some(grid.length()) {
            return Err(CliError::schema(
                &self.path,
                format!("field grid (n={n:?}, L={l:?}) does not match the configured grid"),
            ));
        }
        Ok(())
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let s = self.rows[row].get(col).unwrap_or("");
        s.parse()
            .map_err(|_| CliError::schema(&self.path, format!("row {}: bad number {s:?} in {}", row + 1, self.columns[col])))
    }

    pub fn opt_f64_at(&self, row: usize, col: usize) -> Result<Option<f64>, CliError> {
        match self.rows[row].get(col) {
            Some("") | None => Ok(None),
            Some(_) => self.f64_at(row, col).map(Some),
        }
    }

    fn i64_at(&self, row: usize, col: usize) -> Result<i64, CliError> {
        let s = self.rows[row].get(col).unwrap_or("");
        s.parse()
            .map_err(|_| CliError::schema(&self.path, format!("row {}: bad integer {s:?}", row + 1)))
    }
}

fn grid_meta(grid: &WavenumberGrid, kind: FieldKind) -> Vec<(&'static str, String)> {
    vec![
        ("n", grid.n().to_string()),
        ("L", num(grid.length())),
        ("kind", kind.as_str().to_string()),
    ]
}

/// One record per step: rows `(step, time, k1, k2, re, im)` over the
/// half-lattice.
pub fn write_trajectory(path: &Path, cfg: &Config, command: &str, h: f64, states: &[SpectralField]) -> Result<PathBuf, CliError> {
    let grid = states[0].grid().clone();
    let mut out = Output::create(path, command, cfg, &grid_meta(&grid, states[0].kind()))?;
    out.row(FIELD_COLUMNS)?;
    let half: Vec<usize> = grid.half_lattice().collect();
    for (j, w) in states.iter().enumerate() {
        let (step, time) = (j.to_string(), num(j as f64 * h));
        for &i in &half {
            let (k1, k2) = grid.wavenumber(i);
            let c = w.coeffs()[i];
            out.row([step.clone(), time.clone(), k1.to_string(), k2.to_string(), num(c.re), num(c.im)])?;
        }
    }
    out.finish()
}

// Groups the rows of a per-step field table into consecutive steps.
fn field_blocks(t: &Table, grid: &Arc<WavenumberGrid>) -> Result<Vec<(usize, usize)>, CliError> {
    let per = grid.half_lattice().count();
    if t.rows.is_empty() || !t.rows.len().is_multiple_of(per) {
        return Err(CliError::schema(&t.path, format!("row count {} is not a multiple of {per}", t.rows.len())));
    }
    Ok((0..t.rows.len() / per).map(|b| (b * per, per)).collect())
}

fn fill_pair(
    t: &Table,
    grid: &WavenumberGrid,
    row: usize,
    re_col: usize,
    field: &mut SpectralField,
) -> Result<(), CliError> {
    let (k1, k2) = (t.i64_at(row, 2)?, t.i64_at(row, 3)?);
    let z = Complex64::new(t.f64_at(row, re_col)?, t.f64_at(row, re_col + 1)?);
    let i = grid
        .index_of(k1, k2)
        .filter(|&i| grid.is_active(i))
        .ok_or_else(|| CliError::schema(&t.path, format!("mode ({k1},{k2}) is not on the grid")))?;
    let j = grid.conjugate_index(i).expect("active modes pair up");
    field.coeffs_mut()[i] = z;
    field.coeffs_mut()[j] = z.conj();
    Ok(())
}

fn check_step(t: &Table, row: usize, expected: usize) -> Result<(), CliError> {
    let s = t.i64_at(row, 0)?;
    if s != expected as i64 {
        return Err(CliError::schema(&t.path, format!("row {}: expected step {expected}, found {s}", row + 1)));
    }
    Ok(())
}

pub fn read_trajectory(path: &Path, grid: &Arc<WavenumberGrid>) -> Result<Vec<SpectralField>, CliError> {
    let t = Table::read(path)?;
    t.expect_columns(&FIELD_COLUMNS)?;
    t.expect_grid(grid)?;
    let kind = t
        .meta
        .get("kind")
        .and_then(|k| FieldKind::parse(k))
        .ok_or_else(|| CliError::schema(path, "missing or unknown field kind"))?;
    let mut states = Vec::new();
    for (j, (start, len)) in field_blocks(&t, grid)?.into_iter().enumerate() {
        let mut w = SpectralField::zeros(grid.clone(), kind);
        for r in start..start + len {
            check_step(&t, r, j)?;
            fill_pair(&t, grid, r, 4, &mut w)?;
        }
        states.push(w);
    }
    Ok(states)
}

/// Observations `y_j` with the noise realization `ξ_j`, one record per step.
pub fn write_observations(path: &Path, cfg: &Config, h: f64, obs: &[Observation], grid: &Arc<WavenumberGrid>) -> Result<PathBuf, CliError> {
    let mut out = Output::create(path, "observe", cfg, &grid_meta(grid, FieldKind::Vorticity))?;
    out.row(OBS_COLUMNS)?;
    let half: Vec<usize> = grid.half_lattice().collect();
    for o in obs {
        let (step, time) = (o.step.to_string(), num(o.step as f64 * h));
        for &i in &half {
            let (k1, k2) = grid.wavenumber(i);
            let (y, xi) = (o.y.coeffs()[i], o.xi.coeffs()[i]);
            out.row([
                step.clone(),
                time.clone(),
                k1.to_string(),
                k2.to_string(),
                num(y.re),
                num(y.im),
                num(xi.re),
                num(xi.im),
            ])?;
        }
    }
    out.finish()
}

pub fn read_observations(path: &Path, grid: &Arc<WavenumberGrid>) -> Result<Vec<Observation>, CliError> {
    let t = Table::read(path)?;
    t.expect_columns(&OBS_COLUMNS)?;
    t.expect_grid(grid)?;
    let mut obs = Vec::new();
    for (j, (start, len)) in field_blocks(&t, grid)?.into_iter().enumerate() {
        let mut y = SpectralField::zeros(grid.clone(), FieldKind::Vorticity);
        let mut xi = y.clone();
        for r in start..start + len {
            check_step(&t, r, j + 1)?;
            fill_pair(&t, grid, r, 4, &mut y)?;
            fill_pair(&t, grid, r, 6, &mut xi)?;
        }
        obs.push(Observation { step: j + 1, y, xi });
    }
    Ok(obs)
}

/// Per-step diagnostics. Continuous runs add `rel_err_l2` and leave the
/// bound columns empty; tracked modes append one column group each,
/// suffixed `_m0`, `_m1`, ….
pub fn write_records(
    path: &Path,
    cfg: &Config,
    command: &str,
    records: &[StepRecord],
    continuous: bool,
) -> Result<PathBuf, CliError> {
    let mut out = Output::create(path, command, cfg, &[])?;
    let mut header: Vec<String> = RECORD_COLUMNS.iter().map(|s| s.to_string()).collect();
    if continuous {
        header.push("rel_err_l2".into());
    }
    let modes = records.first().map_or(0, |r| r.modes.len());
    for m in 0..modes {
        header.extend(MODE_COLUMNS.iter().map(|c| format!("{c}_m{m}")));
    }
    out.row(&header)?;
    for r in records {
        let mut row = vec![
            r.step.to_string(),
            num(r.time),
            num(r.err_sq_h0),
            num(r.err_h1),
            opt(r.lower_bound),
            opt(r.upper_bound),
        ];
        if continuous {
            row.push(opt(r.rel_err_l2));
        }
        for s in &r.modes {
            row.extend([
                s.k.0.to_string(),
                s.k.1.to_string(),
                num(s.truth.re),
                num(s.truth.im),
                num(s.estimate.re),
                num(s.estimate.im),
                opt(s.observation.map(|z| z.re)),
                opt(s.observation.map(|z| z.im)),
            ]);
        }
        out.row(&row)?;
    }
    out.finish()
}

pub fn write_bounds(path: &Path, cfg: &Config, h: f64, lower: f64, upper: &[f64]) -> Result<PathBuf, CliError> {
    let mut out = Output::create(path, "bounds", cfg, &[])?;
    out.row(["step", "time", "lower_bound", "upper_bound"])?;
    for (j, u) in upper.iter().enumerate() {
        out.row([j.to_string(), num(j as f64 * h), num(lower), num(*u)])?;
    }
    out.finish()
}
