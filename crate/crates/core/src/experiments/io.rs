//! Point sets from comma-separated text and simulation tables to CSV.

use super::monte_carlo::MCReport;
use crate::error::{Error, Result};
use crate::kernels::Sample;
use std::io::{Read, Write};
use std::path::Path;

/// Reads one point per row. A first row that does not parse as numbers is
/// taken as a header. All rows must have the same number of columns.
pub fn read_points_csv<R: Read>(reader: R) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut dim = None;
    let mut data = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format {
            offset: e.position().map_or(0, |p| p.byte()),
            message: e.to_string(),
        })?;
        let offset = rec.position().map_or(0, |p| p.byte());
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if k == 0 => continue,
            Err(_) => {
                return Err(Error::Format {
                    offset,
                    message: format!("non-numeric value on line {}", k + 1),
                })
            }
        };
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::Format {
                offset,
                message: format!("non-finite value {bad} on line {}", k + 1),
            });
        }
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Format {
                    offset,
                    message: format!(
                        "line {} has {} columns, expected {d}",
                        k + 1,
                        row.len()
                    ),
                })
            }
            _ => {}
        }
        data.extend(row);
    }
    match dim {
        Some(d) => Sample::new(d, data),
        None => Err(Error::Format {
            offset: 0,
            message: "no data rows".into(),
        }),
    }
}

pub fn load_points_csv(path: &Path) -> Result<Sample> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_points_csv(std::io::BufReader::new(file))
}

pub fn write_reports_csv<W: Write>(reports: &[MCReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::domain(format!("cannot write CSV: {e}"));
    w.write_record(MCReport::CSV_HEADER).map_err(io)?;
    for r in reports {
        w.write_record(r.csv_record()).map_err(io)?;
    }
    w.flush()
        .map_err(|e| Error::domain(format!("cannot write CSV: {e}")))
}
