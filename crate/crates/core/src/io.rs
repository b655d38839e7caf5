//! File formats: edge lists, dense matrices (CSV / raw binary), labels,
//! splits, and parameter checkpoints.
//!
//! Binary matrix layout: `u32 n, u32 d` (little endian, 8-byte header)
//! followed by `n * d` row-major `f64` values, little endian.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::graph::SplitSpec;

pub const ENCODER_MAGIC: &[u8; 8] = b"GCLENC01";
pub const MLP_MAGIC: &[u8; 8] = b"GCLMLP01";

/// Whitespace-separated "u v" pairs, one per line; blank lines and `#`
/// comments are skipped.
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open edge file {}: {e}", path.display())))?;
    let mut edges = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let (u, v) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::Input(format!(
                    "edge file line {}: expected exactly two ids, got {trimmed:?}",
                    lineno + 1
                )))
            }
        };
        let u = u.parse::<usize>().map_err(|_| {
            Error::Parse(format!("edge file line {}: bad node id {u:?}", lineno + 1))
        })?;
        let v = v.parse::<usize>().map_err(|_| {
            Error::Parse(format!("edge file line {}: bad node id {v:?}", lineno + 1))
        })?;
        edges.push((u, v));
    }
    Ok(edges)
}

pub fn write_edge_list(path: &Path, edges: &[(usize, usize)]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for &(u, v) in edges {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

/// Dense matrix from CSV (one row per node, comma-separated).
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let row = trimmed
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| {
                    Error::Parse(format!(
                        "line {}: non-numeric value {tok:?}",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Input(format!(
                    "line {}: expected {} columns, got {}",
                    lineno + 1,
                    first.len(),
                    row.len()
                )));
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    let d = rows.first().map_or(0, Vec::len);
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, d), flat)
        .map_err(|e| Error::Input(format!("bad matrix shape: {e}")))
}

pub fn read_matrix_binary(path: &Path) -> Result<Array2<f64>> {
    let mut file = BufReader::new(
        fs::File::open(path)
            .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?,
    );
    let n = read_u32(&mut file)? as usize;
    let d = read_u32(&mut file)? as usize;
    let mut buf = vec![0u8; n * d * 8];
    file.read_exact(&mut buf)
        .map_err(|e| Error::Input(format!("{}: truncated payload: {e}", path.display())))?;
    let values: Vec<f64> = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Array2::from_shape_vec((n, d), values)
        .map_err(|e| Error::Input(format!("bad matrix shape: {e}")))
}

pub fn write_matrix_binary(path: &Path, m: &ArrayView2<f64>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(&(m.nrows() as u32).to_le_bytes())?;
    w.write_all(&(m.ncols() as u32).to_le_bytes())?;
    let std = m.as_standard_layout();
    for &x in std.as_slice().expect("standard layout") {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Sniff by extension: `.bin` is the raw binary format, anything else CSV.
pub fn read_matrix_auto(path: &Path) -> Result<Array2<f64>> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => read_matrix_binary(path),
        _ => read_matrix_csv(path),
    }
}

/// One integer class id per line.
pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    let mut labels = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        labels.push(trimmed.parse::<usize>().map_err(|_| {
            Error::Parse(format!("label line {}: bad class id {trimmed:?}", lineno + 1))
        })?);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for &l in labels {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

/// Splits JSON: `{"train": [...], "valid": [...], "test": [...]}`.
pub fn read_splits(path: &Path) -> Result<SplitSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn write_splits(path: &Path, splits: &SplitSpec) -> Result<()> {
    let text = serde_json::to_string_pretty(splits)
        .map_err(|e| Error::Parse(format!("serialize splits: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Input(format!("truncated header: {e}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Input(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64_block<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; len * 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Input(format!("truncated payload: {e}")))?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

fn write_f64_block<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for &x in values {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Encoder checkpoint: magic, `u64 h, d_g, d_p`, 32-byte config digest,
/// then row-major f64 payloads of the two projection matrices.
pub fn write_encoder_checkpoint(
    path: &Path,
    w_g: &ArrayView2<f64>,
    w_p: &ArrayView2<f64>,
    digest: &[u8; 32],
) -> Result<()> {
    if w_g.nrows() != w_p.nrows() {
        return Err(Error::Argument(
            "projection matrices disagree on input dimension".into(),
        ));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(ENCODER_MAGIC)?;
    w.write_all(&(w_g.nrows() as u64).to_le_bytes())?;
    w.write_all(&(w_g.ncols() as u64).to_le_bytes())?;
    w.write_all(&(w_p.ncols() as u64).to_le_bytes())?;
    w.write_all(digest)?;
    write_f64_block(&mut w, w_g.as_standard_layout().as_slice().unwrap())?;
    write_f64_block(&mut w, w_p.as_standard_layout().as_slice().unwrap())?;
    Ok(())
}

pub struct EncoderCheckpoint {
    pub w_g: Array2<f64>,
    pub w_p: Array2<f64>,
    pub digest: [u8; 32],
}

pub fn read_encoder_checkpoint(path: &Path) -> Result<EncoderCheckpoint> {
    let mut r = BufReader::new(
        fs::File::open(path)
            .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?,
    );
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Input(format!("truncated checkpoint: {e}")))?;
    if &magic != ENCODER_MAGIC {
        return Err(Error::Input(format!(
            "{}: not an encoder checkpoint",
            path.display()
        )));
    }
    let h = read_u64(&mut r)? as usize;
    let d_g = read_u64(&mut r)? as usize;
    let d_p = read_u64(&mut r)? as usize;
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)
        .map_err(|e| Error::Input(format!("truncated digest: {e}")))?;
    let w_g = Array2::from_shape_vec((h, d_g), read_f64_block(&mut r, h * d_g)?).unwrap();
    let w_p = Array2::from_shape_vec((h, d_p), read_f64_block(&mut r, h * d_p)?).unwrap();
    Ok(EncoderCheckpoint { w_g, w_p, digest })
}

/// Distillation MLP checkpoint: magic, `u64 d_in, d_hidden, d_out`,
/// 32-byte config digest, then W1, b1, W2, b2 payloads.
pub fn write_mlp_checkpoint(
    path: &Path,
    w1: &ArrayView2<f64>,
    b1: &[f64],
    w2: &ArrayView2<f64>,
    b2: &[f64],
    digest: &[u8; 32],
) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    w.write_all(MLP_MAGIC)?;
    w.write_all(&(w1.nrows() as u64).to_le_bytes())?;
    w.write_all(&(w1.ncols() as u64).to_le_bytes())?;
    w.write_all(&(w2.ncols() as u64).to_le_bytes())?;
    w.write_all(digest)?;
    write_f64_block(&mut w, w1.as_standard_layout().as_slice().unwrap())?;
    write_f64_block(&mut w, b1)?;
    write_f64_block(&mut w, w2.as_standard_layout().as_slice().unwrap())?;
    write_f64_block(&mut w, b2)?;
    Ok(())
}

pub struct MlpCheckpoint {
    pub w1: Array2<f64>,
    pub b1: Vec<f64>,
    pub w2: Array2<f64>,
    pub b2: Vec<f64>,
    pub digest: [u8; 32],
}

pub fn read_mlp_checkpoint(path: &Path) -> Result<MlpCheckpoint> {
    let mut r = BufReader::new(
        fs::File::open(path)
            .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))?,
    );
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Input(format!("truncated checkpoint: {e}")))?;
    if &magic != MLP_MAGIC {
        return Err(Error::Input(format!(
            "{}: not an MLP checkpoint",
            path.display()
        )));
    }
    let d_in = read_u64(&mut r)? as usize;
    let d_hidden = read_u64(&mut r)? as usize;
    let d_out = read_u64(&mut r)? as usize;
    let mut digest = [0u8; 32];
    r.read_exact(&mut digest)
        .map_err(|e| Error::Input(format!("truncated digest: {e}")))?;
    let w1 = Array2::from_shape_vec((d_in, d_hidden), read_f64_block(&mut r, d_in * d_hidden)?)
        .unwrap();
    let b1 = read_f64_block(&mut r, d_hidden)?;
    let w2 = Array2::from_shape_vec((d_hidden, d_out), read_f64_block(&mut r, d_hidden * d_out)?)
        .unwrap();
    let b2 = read_f64_block(&mut r, d_out)?;
    Ok(MlpCheckpoint {
        w1,
        b1,
        w2,
        b2,
        digest,
    })
}

/// One community id per line.
pub fn read_partition_file(path: &Path) -> Result<Vec<usize>> {
    read_labels(path)
}

pub fn write_partition_file(path: &Path, assignment: &[usize]) -> Result<()> {
    write_labels(path, assignment)
}
