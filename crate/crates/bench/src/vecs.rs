//! `.fvecs` / `.ivecs` files.
//!
//! Each record is a little-endian `i32` dimension `d` followed by `d`
//! little-endian 4-byte elements (`f32` or `i32`). All records share `d`.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use crate::error::{BenchError, Result};

fn read_records<R: Read, T>(mut r: R, decode: fn([u8; 4]) -> T) -> Result<Vec<Vec<T>>> {
    let mut out = Vec::new();
    let mut offset = 0u64;
    let mut dim: Option<usize> = None;
    loop {
        let record_start = offset;
        let mut head = [0u8; 4];
        match read_full(&mut r, &mut head)? {
            0 => break,
            4 => {}
            n => {
                return Err(BenchError::Format {
                    offset: record_start,
                    reason: format!("truncated dimension field ({n} of 4 bytes)"),
                })
            }
        }
        offset += 4;
        let d = i32::from_le_bytes(head);
        if d <= 0 {
            return Err(BenchError::Format {
                offset: record_start,
                reason: format!("non-positive dimension {d}"),
            });
        }
        let d = d as usize;
        if let Some(expected) = dim {
            if d != expected {
                return Err(BenchError::Format {
                    offset: record_start,
                    reason: format!("dimension {d} differs from {expected}"),
                });
            }
        }
        dim = Some(d);
        let mut body = vec![0u8; d * 4];
        let got = read_full(&mut r, &mut body)?;
        if got < body.len() {
            return Err(BenchError::Format {
                offset: record_start,
                reason: format!("truncated record: {got} of {} payload bytes", body.len()),
            });
        }
        offset += body.len() as u64;
        out.push(
            body.chunks_exact(4)
                .map(|c| decode([c[0], c[1], c[2], c[3]]))
                .collect(),
        );
    }
    Ok(out)
}

/// Reads until `buf` is full or EOF; returns the byte count.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}

fn write_records<W: Write, T: Copy>(
    mut w: W,
    rows: &[Vec<T>],
    encode: fn(T) -> [u8; 4],
) -> Result<()> {
    if let Some(first) = rows.first() {
        if let Some(bad) = rows.iter().position(|r| r.len() != first.len()) {
            return Err(BenchError::Input(format!(
                "row {bad} has a different dimension"
            )));
        }
        if first.is_empty() {
            return Err(BenchError::Input("rows must be non-empty".into()));
        }
    }
    for row in rows {
        w.write_all(&(row.len() as i32).to_le_bytes())?;
        for &x in row {
            w.write_all(&encode(x))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_fvecs<R: Read>(r: R) -> Result<Vec<Vec<f32>>> {
    read_records(r, f32::from_le_bytes)
}

pub fn read_ivecs<R: Read>(r: R) -> Result<Vec<Vec<i32>>> {
    read_records(r, i32::from_le_bytes)
}

pub fn write_fvecs<W: Write>(w: W, rows: &[Vec<f32>]) -> Result<()> {
    write_records(w, rows, f32::to_le_bytes)
}

pub fn write_ivecs<W: Write>(w: W, rows: &[Vec<i32>]) -> Result<()> {
    write_records(w, rows, i32::to_le_bytes)
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    read_fvecs(BufReader::new(
        File::open(path.as_ref()).map_err(BenchError::file(path.as_ref()))?,
    ))
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    read_ivecs(BufReader::new(
        File::open(path.as_ref()).map_err(BenchError::file(path.as_ref()))?,
    ))
}

pub fn save_fvecs(path: impl AsRef<Path>, rows: &[Vec<f32>]) -> Result<()> {
    write_fvecs(
        BufWriter::new(File::create(path.as_ref()).map_err(BenchError::file(path.as_ref()))?),
        rows,
    )
}

pub fn save_ivecs(path: impl AsRef<Path>, rows: &[Vec<i32>]) -> Result<()> {
    write_ivecs(
        BufWriter::new(File::create(path.as_ref()).map_err(BenchError::file(path.as_ref()))?),
        rows,
    )
}
