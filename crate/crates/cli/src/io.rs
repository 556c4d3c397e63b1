//! CSV and JSON file formats.
//!
//! Data panels: a header row, then one line per variable whose first field
//! is the variable name and whose remaining fields are observations.
//!
//! Time series: a header row, then one line per time `t = 0..T` whose first
//! field is `t` and whose remaining `K` fields are the variables.

use std::fs;
use std::io::Write;
use std::path::Path;

use hdcca::coint::TimeSeriesPanel;
use hdcca::DataPanel;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::CliError;

fn reader(path: &Path) -> Result<csv::Reader<fs::File>, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file))
}

fn parse_field(path: &Path, line: u64, col: usize, field: &str) -> Result<f64, CliError> {
    let v: f64 = field
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("field {} is not a number: {field:?}", col + 1)))?;
    if !v.is_finite() {
        return Err(CliError::parse(path, line, format!("field {} is not finite", col + 1)));
    }
    Ok(v)
}

fn records(path: &Path) -> Result<(usize, Vec<(u64, csv::StringRecord)>), CliError> {
    let mut rdr = reader(path)?;
    let width = rdr.headers().map_err(|e| CliError::csv(path, e))?.len();
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::csv(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(CliError::parse(path, line, format!("expected {width} fields as in the header, found {}", rec.len())));
        }
        out.push((line, rec));
    }
    Ok((width, out))
}

pub fn read_panel(path: &Path) -> Result<DataPanel<f64>, CliError> {
    let (width, recs) = records(path)?;
    if width < 2 {
        return Err(CliError::parse(path, 1, "need a name column and at least one observation".into()));
    }
    if recs.is_empty() {
        return Err(CliError::parse(path, 1, "no variables after the header".into()));
    }
    let mut data = Vec::with_capacity(recs.len() * (width - 1));
    for (line, rec) in &recs {
        for (j, f) in rec.iter().enumerate().skip(1) {
            data.push(parse_field(path, *line, j, f)?);
        }
    }
    Ok(DataPanel::from_row_slice(recs.len(), width - 1, &data)?)
}

pub fn read_time_series(path: &Path) -> Result<TimeSeriesPanel, CliError> {
    let (width, recs) = records(path)?;
    if width < 2 {
        return Err(CliError::parse(path, 1, "need a time column and at least one variable".into()));
    }
    let k = width - 1;
    let mut x = DMatrix::zeros(k, recs.len());
    for (t, (line, rec)) in recs.iter().enumerate() {
        let idx: usize = rec[0]
            .parse()
            .map_err(|_| CliError::parse(path, *line, format!("time index {:?} is not an integer", &rec[0])))?;
        if idx != t {
            return Err(CliError::parse(path, *line, format!("expected time index {t}, found {idx}")));
        }
        for j in 0..k {
            x[(j, t)] = parse_field(path, *line, j + 1, &rec[j + 1])?;
        }
    }
    Ok(TimeSeriesPanel::new(x)?)
}

fn write_csv(path: Option<&Path>, header: Vec<String>, rows: impl Iterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&header).map_err(|e| CliError::csv(Path::new("-"), e))?;
        for r in rows {
            w.write_record(&r).map_err(|e| CliError::csv(Path::new("-"), e))?;
        }
        w.flush().map_err(|e| CliError::io(Path::new("-"), e))?;
    }
    emit(path, &buf)
}

pub fn write_panel(path: Option<&Path>, prefix: &str, m: &DMatrix<f64>) -> Result<(), CliError> {
    let header = std::iter::once("variable".to_string()).chain((0..m.ncols()).map(|j| format!("o{j}"))).collect();
    let rows = (0..m.nrows()).map(|i| std::iter::once(format!("{prefix}{i}")).chain(m.row(i).iter().map(|v| v.to_string())).collect());
    write_csv(path, header, rows)
}

pub fn write_time_series(path: Option<&Path>, x: &TimeSeriesPanel) -> Result<(), CliError> {
    let m = x.matrix();
    let header = std::iter::once("t".to_string()).chain((0..m.nrows()).map(|i| format!("x{i}"))).collect();
    let rows = (0..m.ncols()).map(|t| std::iter::once(t.to_string()).chain(m.column(t).iter().map(|v| v.to_string())).collect());
    write_csv(path, header, rows)
}

pub fn write_rows(path: Option<&Path>, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    write_csv(
        path,
        header.iter().map(|s| s.to_string()).collect(),
        rows.iter().map(|r| r.iter().map(|v| v.to_string()).collect()),
    )
}

pub fn write_json(path: Option<&Path>, value: &impl Serialize) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(hdcca::Error::from)?;
    s.push('\n');
    emit(path, s.as_bytes())
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let s = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| CliError::parse(path, e.line() as u64, e.to_string()))
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout().lock().write_all(bytes).map_err(|e| CliError::io(Path::new("-"), e)),
    }
}
