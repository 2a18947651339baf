//! Trajectory-log file format.
//!
//! Binary layout (little-endian), 24-byte header then the payload:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "TRJL"
//! 4       1     version, currently 1
//! 5       1     dtype: 0 = f32, 1 = f64
//! 6       2     reserved, must be 0
//! 8       8     n_rows (u64)
//! 16      8     n_cols (u64)
//! 24      ...   n_rows * n_cols values, row-major
//! ```
//!
//! The round trip is bit-exact for dtype 1 and quantizes through f32 for
//! dtype 0. Paths ending in `.csv` use a plain-text alternative with a
//! `c0,c1,...` header row instead; [`read_log`]/[`write_log`] dispatch on
//! the extension.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::{SeriesKind, SeriesMatrix};

pub const MAGIC: [u8; 4] = *b"TRJL";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDtype {
    F32,
    F64,
}

impl LogDtype {
    fn code(self) -> u8 {
        match self {
            LogDtype::F32 => 0,
            LogDtype::F64 => 1,
        }
    }

    fn width(self) -> usize {
        match self {
            LogDtype::F32 => 4,
            LogDtype::F64 => 8,
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().map_or(false, |e| e.eq_ignore_ascii_case("csv"))
}

/// Writes the matrix to `path`; `.csv` extensions select the text format,
/// anything else the binary format.
pub fn write_log(m: &SeriesMatrix, path: &Path, dtype: LogDtype) -> Result<()> {
    if is_csv(path) {
        write_csv(m, path)
    } else {
        write_binary(m, path, dtype)
    }
}

/// Reads a matrix back, auto-detecting the format by extension. The result
/// carries [`SeriesKind::Generic`]; callers re-tag it.
pub fn read_log(path: &Path) -> Result<SeriesMatrix> {
    if is_csv(path) {
        read_csv(path)
    } else {
        read_binary(path)
    }
}

fn write_binary(m: &SeriesMatrix, path: &Path, dtype: LogDtype) -> Result<()> {
    let mut buf = Vec::with_capacity(HEADER_LEN + m.data().len() * dtype.width());
    buf.extend_from_slice(&MAGIC);
    buf.push(VERSION);
    buf.push(dtype.code());
    buf.extend_from_slice(&0u16.to_le_bytes());
    buf.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    match dtype {
        LogDtype::F64 => {
            for &v in m.data() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        LogDtype::F32 => {
            for &v in m.data() {
                buf.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
    }
    let mut file = fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

fn read_binary(path: &Path) -> Result<SeriesMatrix> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(format!(
            "header short: {} bytes, need {HEADER_LEN}",
            bytes.len()
        )));
    }
    if bytes[0..4] != MAGIC {
        return Err(Error::format("magic: expected \"TRJL\""));
    }
    if bytes[4] != VERSION {
        return Err(Error::format(format!("version: expected {VERSION}, got {}", bytes[4])));
    }
    let dtype = match bytes[5] {
        0 => LogDtype::F32,
        1 => LogDtype::F64,
        other => return Err(Error::format(format!("dtype: unknown code {other}"))),
    };
    if bytes[6] != 0 || bytes[7] != 0 {
        return Err(Error::format("reserved: must be zero"));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let count = rows
        .checked_mul(cols)
        .filter(|&c| c <= (usize::MAX / 8) as u64)
        .ok_or_else(|| Error::format("n_rows * n_cols overflows"))? as usize;

    let expected = HEADER_LEN + count * dtype.width();
    if bytes.len() < expected {
        return Err(Error::format(format!(
            "payload short: {} bytes, need {expected}",
            bytes.len()
        )));
    }
    if bytes.len() > expected {
        return Err(Error::format(format!(
            "payload long: {} trailing bytes",
            bytes.len() - expected
        )));
    }

    let mut data = Vec::with_capacity(count);
    match dtype {
        LogDtype::F64 => {
            for chunk in bytes[HEADER_LEN..].chunks_exact(8) {
                data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
            }
        }
        LogDtype::F32 => {
            for chunk in bytes[HEADER_LEN..].chunks_exact(4) {
                data.push(f32::from_le_bytes(chunk.try_into().unwrap()) as f64);
            }
        }
    }
    if !data.iter().all(|v| v.is_finite()) {
        return Err(Error::format("payload: non-finite value"));
    }
    SeriesMatrix::new(rows as usize, cols as usize, data, SeriesKind::Generic)
        .map_err(|e| Error::format(format!("shape: {e}")))
}

fn write_csv(m: &SeriesMatrix, path: &Path) -> Result<()> {
    let mut out = String::new();
    let header: Vec<String> = (0..m.cols()).map(|j| format!("c{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v}")).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_csv(path: &Path) -> Result<SeriesMatrix> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format("csv: empty file"))?;
    let cols = header.split(',').count();
    let mut data = Vec::new();
    let mut rows = 0usize;
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols {
            return Err(Error::format(format!(
                "csv row {}: {} fields, expected {cols}",
                lineno + 2,
                fields.len()
            )));
        }
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| {
                Error::format(format!("csv row {}: bad number '{f}'", lineno + 2))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if !data.iter().all(|v| v.is_finite()) {
        return Err(Error::format("csv: non-finite value"));
    }
    SeriesMatrix::new(rows, cols, data, SeriesKind::Generic)
        .map_err(|e| Error::format(format!("shape: {e}")))
}
