//! Deterministic CSV and JSON emission.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{OutputFormat, ScenarioConfig};
use crate::error::{Error, Result};
use crate::experiments::{ObservableRecord, StabilityChart};

/// Version string recorded in every metadata file.
pub fn version_string() -> String {
    format!("becnc v{}", env!("CARGO_PKG_VERSION"))
}

/// Conventions restated in the metadata so that plots need no unit logic.
pub const UNITS_NOTE: &str =
    "hbar = m = k_B = 1; energies and temperatures in units of mu0 = u0 n = 1; \
wavenumbers in inverse healing lengths; times in 1/mu0; t = 0 is drive-off";

#[derive(Debug, Serialize)]
pub struct Metadata<'a, E: Serialize> {
    pub command: &'a str,
    pub version: String,
    pub units: &'static str,
    pub seed: u64,
    pub tol: f64,
    pub config: &'a ScenarioConfig,
    pub files: Vec<String>,
    pub extra: E,
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_records_csv(path: &Path, records: &[ObservableRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    if records.is_empty() {
        w.write_record(crate::experiments::RECORD_COLUMNS)
            .map_err(csv_err)?;
    }
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Write records in the configured format; returns the file name.
pub fn write_records(
    dir: &Path,
    stem: &str,
    format: OutputFormat,
    records: &[ObservableRecord],
) -> Result<String> {
    let name = match format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    };
    let path = dir.join(&name);
    match format {
        OutputFormat::Csv => write_records_csv(&path, records)?,
        OutputFormat::Json => write_json(&path, records)?,
    }
    Ok(name)
}

/// File-name stem for one temperature, e.g. `vtrace_T0.5`.
pub fn temperature_stem(prefix: &str, temperature: f64) -> String {
    format!("{prefix}_T{temperature}")
}

/// Matrix CSV: header row of amplitudes, first column k.
pub fn write_matrix_csv<T: ToString>(
    path: &Path,
    k: &[f64],
    amplitude: &[f64],
    cells: &[Vec<T>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["k".to_string()];
    header.extend(amplitude.iter().map(|a| a.to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for (ki, row) in k.iter().zip(cells) {
        let mut rec = vec![ki.to_string()];
        rec.extend(row.iter().map(|c| c.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the flag and growth matrices and the boundary list of a chart.
pub fn write_chart(dir: &Path, prefix: &str, chart: &StabilityChart) -> Result<Vec<String>> {
    let flags: Vec<Vec<u8>> = chart
        .unstable
        .iter()
        .map(|r| r.iter().map(|&b| b as u8).collect())
        .collect();
    let names = [
        format!("{prefix}_unstable.csv"),
        format!("{prefix}_growth.csv"),
        format!("{prefix}_boundaries.csv"),
    ];
    write_matrix_csv(&dir.join(&names[0]), &chart.k, &chart.amplitude, &flags)?;
    write_matrix_csv(
        &dir.join(&names[1]),
        &chart.k,
        &chart.amplitude,
        &chart.growth,
    )?;
    let mut w = csv::Writer::from_path(dir.join(&names[2])).map_err(csv_err)?;
    w.write_record(["A", "k", "entering"]).map_err(csv_err)?;
    for b in &chart.boundaries {
        w.serialize((b.amplitude, b.k, b.entering))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(names.to_vec())
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
