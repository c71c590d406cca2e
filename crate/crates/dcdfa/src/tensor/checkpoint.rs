//! Named-tensor checkpoints.
//!
//! A checkpoint is a pair of files sharing a path prefix:
//!   `<prefix>.idx` — text index: magic line, then one line per tensor
//!                    with `name shape byte_offset` (shape is
//!                    comma-separated dims),
//!   `<prefix>.bin` — flat little-endian f32 blob.
//!
//! Values are stored at f32 width, which matches in-memory storage, so a
//! load followed by a save reproduces both files byte for byte.

use std::fs;
use std::path::Path;

use super::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &str = "DCDFA-CKPT-1";

pub fn save(prefix: &Path, entries: &[(String, Tensor)]) -> Result<()> {
    let mut index = String::new();
    index.push_str(MAGIC);
    index.push('\n');
    let mut blob: Vec<u8> = Vec::new();
    for (name, tensor) in entries {
        if name.contains(' ') || name.contains('\n') {
            return Err(Error::Checkpoint(format!(
                "tensor name '{name}' contains whitespace"
            )));
        }
        let offset = blob.len();
        for v in tensor.to_f32_vec() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        let dims: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        index.push_str(&format!("{} {} {}\n", name, dims.join(","), offset));
    }
    let idx_path = prefix.with_extension("idx");
    let bin_path = prefix.with_extension("bin");
    fs::write(&idx_path, index).map_err(|e| Error::io(idx_path.display().to_string(), e))?;
    fs::write(&bin_path, blob).map_err(|e| Error::io(bin_path.display().to_string(), e))?;
    Ok(())
}

pub fn load(prefix: &Path) -> Result<Vec<(String, Vec<usize>, Vec<f32>)>> {
    let idx_path = prefix.with_extension("idx");
    let bin_path = prefix.with_extension("bin");
    let index = fs::read_to_string(&idx_path)
        .map_err(|e| Error::io(idx_path.display().to_string(), e))?;
    let blob = fs::read(&bin_path).map_err(|e| Error::io(bin_path.display().to_string(), e))?;
    let mut lines = index.lines();
    match lines.next() {
        Some(m) if m == MAGIC => {}
        other => {
            return Err(Error::Checkpoint(format!(
                "bad magic line {other:?}, expected {MAGIC}"
            )))
        }
    }
    let mut out = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let (name, dims, offset) = match (parts.next(), parts.next(), parts.next()) {
            (Some(n), Some(d), Some(o)) => (n, d, o),
            _ => {
                return Err(Error::Checkpoint(format!(
                    "malformed index line {}: '{line}'",
                    lineno + 2
                )))
            }
        };
        let shape: Vec<usize> = dims
            .split(',')
            .map(|d| {
                d.parse::<usize>()
                    .map_err(|_| Error::Checkpoint(format!("bad dim '{d}' in '{line}'")))
            })
            .collect::<Result<_>>()?;
        let offset: usize = offset
            .parse()
            .map_err(|_| Error::Checkpoint(format!("bad offset in '{line}'")))?;
        let count: usize = shape.iter().product();
        let end = offset + count * 4;
        if end > blob.len() {
            return Err(Error::Checkpoint(format!(
                "tensor '{name}' spans {offset}..{end}, blob has {} bytes",
                blob.len()
            )));
        }
        let values: Vec<f32> = blob[offset..end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        out.push((name.to_string(), shape, values));
    }
    Ok(out)
}

/// Load into existing tensors, matching by name and shape.
pub fn load_into(prefix: &Path, entries: &[(String, Tensor)]) -> Result<()> {
    let loaded = load(prefix)?;
    let mut by_name: std::collections::BTreeMap<&str, (&Vec<usize>, &Vec<f32>)> =
        std::collections::BTreeMap::new();
    for (name, shape, values) in &loaded {
        by_name.insert(name.as_str(), (shape, values));
    }
    for (name, tensor) in entries {
        let (shape, values) = by_name.get(name.as_str()).ok_or_else(|| {
            Error::Checkpoint(format!("checkpoint is missing tensor '{name}'"))
        })?;
        if shape.as_slice() != tensor.shape() {
            return Err(Error::Checkpoint(format!(
                "tensor '{name}' has shape {:?} in checkpoint, {:?} in model",
                shape,
                tensor.shape()
            )));
        }
        let as_f64: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        tensor.set_data(&as_f64);
    }
    Ok(())
}
