//! On-disk formats shared with the CLI: field dumps (JSON header + raw
//! little-endian binary) and RFC-4180-style CSV tables.
//!
//! A field dump is a pair of files `<prefix>.json` / `<prefix>.bin`. The
//! header records `{dim, n, half_length, dtype, count}` with dtype
//! `"c128"` (interleaved re/im f64 pairs) or `"f64"`; the binary payload
//! is row-major and bit-exact under round-trip.

use crate::error::{CoreError, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::SpectralGrid;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldHeader {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
    pub dtype: String,
    pub count: usize,
}

fn paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let mut json = prefix.as_os_str().to_owned();
    json.push(".json");
    let mut bin = prefix.as_os_str().to_owned();
    bin.push(".bin");
    (PathBuf::from(json), PathBuf::from(bin))
}

fn write_dump(prefix: &Path, header: &FieldHeader, payload: &[f64]) -> Result<()> {
    let (json_path, bin_path) = paths(prefix);
    serde_json::to_writer(BufWriter::new(File::create(json_path)?), header)
        .map_err(|e| CoreError::Format(e.to_string()))?;
    let mut w = BufWriter::new(File::create(bin_path)?);
    for v in payload {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_dump(prefix: &Path) -> Result<(FieldHeader, Vec<f64>)> {
    let (json_path, bin_path) = paths(prefix);
    let header: FieldHeader =
        serde_json::from_reader(BufReader::new(File::open(json_path)?))
            .map_err(|e| CoreError::Format(e.to_string()))?;
    let mut bytes = Vec::new();
    BufReader::new(File::open(bin_path)?).read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(CoreError::Format(format!(
            "binary payload length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    let payload: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, payload))
}

pub fn save_complex_field(prefix: &Path, u: &ComplexField) -> Result<()> {
    let g = u.grid();
    let header = FieldHeader {
        dim: g.dim(),
        n: g.n(),
        half_length: g.half_length(),
        dtype: "c128".into(),
        count: g.len(),
    };
    let payload: Vec<f64> = u.values().iter().flat_map(|v| [v.re, v.im]).collect();
    write_dump(prefix, &header, &payload)
}

pub fn save_real_field(prefix: &Path, u: &RealField) -> Result<()> {
    let g = u.grid();
    let header = FieldHeader {
        dim: g.dim(),
        n: g.n(),
        half_length: g.half_length(),
        dtype: "f64".into(),
        count: g.len(),
    };
    write_dump(prefix, &header, u.values())
}

pub fn load_complex_field(prefix: &Path) -> Result<ComplexField> {
    let (header, payload) = read_dump(prefix)?;
    if header.dtype != "c128" {
        return Err(CoreError::Format(format!(
            "expected dtype c128, found {}",
            header.dtype
        )));
    }
    let grid = SpectralGrid::new(header.dim, header.n, header.half_length)?;
    if header.count != grid.len() || payload.len() != 2 * header.count {
        return Err(CoreError::Format(format!(
            "count {} inconsistent with dim/n ({} points, {} scalars)",
            header.count,
            grid.len(),
            payload.len()
        )));
    }
    let values = payload
        .chunks_exact(2)
        .map(|c| num_complex::Complex64::new(c[0], c[1]))
        .collect();
    ComplexField::new(grid, values)
}

pub fn load_real_field(prefix: &Path) -> Result<RealField> {
    let (header, payload) = read_dump(prefix)?;
    if header.dtype != "f64" {
        return Err(CoreError::Format(format!(
            "expected dtype f64, found {}",
            header.dtype
        )));
    }
    let grid = SpectralGrid::new(header.dim, header.n, header.half_length)?;
    if header.count != grid.len() || payload.len() != header.count {
        return Err(CoreError::Format(format!(
            "count {} inconsistent with dim/n ({} points, {} scalars)",
            header.count,
            grid.len(),
            payload.len()
        )));
    }
    RealField::new(grid, payload)
}

/// Write a numeric CSV table: header row, then one row per record, floats
/// printed as shortest round-trip decimals (Rust's default `Display`).
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(CoreError::Format(format!(
                "row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}
