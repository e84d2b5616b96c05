//! `FLD1` field snapshots.
//!
//! One ASCII header line
//! `FLD1 <real|complex> d=<d> N=<N0,...> L=<L0,...> xmin=<x0,...>\n`
//! followed by little-endian `f64` values in C row-major order
//! (interleaved `re, im` for complex fields).

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use super::{ComplexField, Grid, RealField};
use crate::error::{Error, Result};

pub const MAGIC: &str = "FLD1";

#[derive(Clone, Debug)]
pub enum Snapshot {
    Real(RealField),
    Complex(ComplexField),
}

impl Snapshot {
    pub fn grid(&self) -> &Arc<Grid> {
        match self {
            Snapshot::Real(f) => f.grid(),
            Snapshot::Complex(f) => f.grid(),
        }
    }

    pub fn into_real(self) -> Option<RealField> {
        match self {
            Snapshot::Real(f) => Some(f),
            Snapshot::Complex(_) => None,
        }
    }

    pub fn into_complex(self) -> Option<ComplexField> {
        match self {
            Snapshot::Complex(f) => Some(f),
            Snapshot::Real(_) => None,
        }
    }
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn header(kind: &str, grid: &Grid) -> String {
    format!(
        "{MAGIC} {kind} d={} N={} L={} xmin={}\n",
        grid.dim(),
        join(grid.shape()),
        join(grid.lengths()),
        join(grid.origin())
    )
}

pub fn encode_real(field: &RealField) -> Vec<u8> {
    let mut out = header("real", field.grid()).into_bytes();
    out.reserve(8 * field.values().len());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn encode_complex(field: &ComplexField) -> Vec<u8> {
    let mut out = header("complex", field.grid()).into_bytes();
    out.reserve(16 * field.values().len());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub fn write_real(path: impl AsRef<Path>, field: &RealField) -> Result<()> {
    write_bytes(path.as_ref(), &encode_real(field))
}

pub fn write_complex(path: impl AsRef<Path>, field: &ComplexField) -> Result<()> {
    write_bytes(path.as_ref(), &encode_complex(field))
}

fn parse_list<T: std::str::FromStr>(token: &str, key: &str) -> std::result::Result<Vec<T>, String> {
    let body = token
        .strip_prefix(key)
        .and_then(|t| t.strip_prefix('='))
        .ok_or_else(|| format!("expected `{key}=...`, found `{token}`"))?;
    body.split(',')
        .map(|s| s.parse::<T>().map_err(|_| format!("bad value `{s}` in `{key}`")))
        .collect()
}

/// Parses an `FLD1` byte stream; `origin` is only used in error messages.
pub fn decode(reader: impl Read, origin: &Path) -> Result<Snapshot> {
    let bad = |reason: String| Error::Format {
        path: origin.to_path_buf(),
        reason,
    };
    let mut reader = BufReader::new(reader);
    let mut line = String::new();
    reader
        .read_line(&mut line)
        .map_err(|e| Error::io(origin, e))?;
    let line = line
        .strip_suffix('\n')
        .ok_or_else(|| bad("missing header newline".into()))?;
    let tokens: Vec<&str> = line.split(' ').collect();
    if tokens.len() != 6 || tokens[0] != MAGIC {
        return Err(bad(format!("malformed header `{line}`")));
    }
    let complex = match tokens[1] {
        "real" => false,
        "complex" => true,
        other => return Err(bad(format!("unknown field kind `{other}`"))),
    };
    let dim: Vec<usize> = parse_list(tokens[2], "d").map_err(&bad)?;
    let shape: Vec<usize> = parse_list(tokens[3], "N").map_err(&bad)?;
    let lengths: Vec<f64> = parse_list(tokens[4], "L").map_err(&bad)?;
    let x_min: Vec<f64> = parse_list(tokens[5], "xmin").map_err(&bad)?;
    if dim.len() != 1 || dim[0] != shape.len() {
        return Err(bad(format!("d={dim:?} disagrees with N={shape:?}")));
    }
    let grid = Grid::new(&shape, &lengths, &x_min)?;

    let mut payload = Vec::new();
    reader
        .read_to_end(&mut payload)
        .map_err(|e| Error::io(origin, e))?;
    let per_point = if complex { 16 } else { 8 };
    if payload.len() != per_point * grid.total() {
        return Err(bad(format!(
            "payload has {} bytes, expected {}",
            payload.len(),
            per_point * grid.total()
        )));
    }
    let floats: Vec<f64> = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    if complex {
        let values = floats
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        Ok(Snapshot::Complex(ComplexField::new(grid, values)?))
    } else {
        Ok(Snapshot::Real(RealField::new(grid, floats)?))
    }
}

pub fn read(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    decode(file, path)
}
