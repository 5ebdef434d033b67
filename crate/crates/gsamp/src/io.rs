//! CSV formats for stations, signals and observation masks.
//!
//! * stations: header `id,lat,lon`, one row per node in node order;
//! * signal: no header, `N` rows of `T` values, row `i` is node `i`;
//! * mask: a single line of `0`/`1` flags.
//!
//! Row and column numbers in errors are 1-based and count the header line.

use std::fs;
use std::path::Path;

use gsamp_core::{Dataset, GeoPoint, Matrix, ObservationMask};

use crate::error::{Error, Result};

fn reader(path: &Path, headers: bool) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            path: path.to_path_buf(),
            row,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

fn parse_cell(path: &Path, row: usize, column: usize, cell: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        row,
        column,
        message: format!("`{cell}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            row,
            column,
            message: format!("`{cell}` is not finite"),
        });
    }
    Ok(v)
}

pub fn load_stations(path: &Path) -> Result<Vec<GeoPoint>> {
    let mut rdr = reader(path, true)?;
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != ["id", "lat", "lon"] {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: format!(
                "expected header `id,lat,lon`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec.position().map_or(out.len() + 2, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                row,
                column: rec.len().min(3) + 1,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let lat = parse_cell(path, row, 2, &rec[1])?;
        let lon = parse_cell(path, row, 3, &rec[2])?;
        let p = GeoPoint::new(lat, lon).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row,
            column: 2,
            message: e.to_string(),
        })?;
        out.push(p);
    }
    if out.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "no stations".into(),
        });
    }
    Ok(out)
}

pub fn load_signal(path: &Path) -> Result<Matrix> {
    let mut rdr = reader(path, false)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let row = rec.position().map_or(rows.len() + 1, |p| p.line() as usize);
        let values = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| parse_cell(path, row, c + 1, cell))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if values.len() != first.len() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row,
                    column: values.len().min(first.len()) + 1,
                    message: format!("expected {} values, found {}", first.len(), values.len()),
                });
            }
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "empty signal file".into(),
        });
    }
    Ok(Matrix::from_rows(&rows)?)
}

pub fn load_dataset(stations: &Path, signal: &Path) -> Result<Dataset> {
    let coords = load_stations(stations)?;
    let x = load_signal(signal)?;
    if x.rows() != coords.len() {
        return Err(Error::Format {
            path: signal.to_path_buf(),
            message: format!(
                "dimension mismatch: {} signal rows but {} stations in {}",
                x.rows(),
                coords.len(),
                stations.display()
            ),
        });
    }
    let name = signal
        .file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(name, coords, x).map_err(|e| Error::Format {
        path: signal.to_path_buf(),
        message: e.to_string(),
    })
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn write_stations(path: &Path, coords: &[GeoPoint]) -> Result<()> {
    let mut s = String::from("id,lat,lon\n");
    for (i, p) in coords.iter().enumerate() {
        s.push_str(&format!("s{i},{},{}\n", p.lat(), p.lon()));
    }
    write_file(path, &s)
}

pub fn write_signal(path: &Path, x: &Matrix) -> Result<()> {
    let mut s = String::new();
    for i in 0..x.rows() {
        let row: Vec<String> = x.row(i).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    write_file(path, &s)
}

pub fn write_dataset(stations: &Path, signal: &Path, data: &Dataset) -> Result<()> {
    write_stations(stations, &data.coords)?;
    write_signal(signal, &data.signal)
}

pub fn load_mask(path: &Path) -> Result<ObservationMask> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    ObservationMask::parse_csv_line(line).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_mask(path: &Path, mask: &ObservationMask) -> Result<()> {
    write_file(path, &format!("{}\n", mask.to_csv_line()))
}
