//! `"ZTEN"`, rank (u8), extents (u32 LE each), then f64 LE payload, row-major.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Tensor, MAX_RANK};

const MAGIC: &[u8; 4] = b"ZTEN";

pub fn zten_to_bytes(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + 4 * t.rank() + 8 * t.len());
    out.extend_from_slice(MAGIC);
    out.push(t.rank() as u8);
    for &e in t.shape() {
        out.extend_from_slice(&(e as u32).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn zten_from_bytes(bytes: &[u8]) -> Result<Tensor> {
    let bad = |msg: &str| Error::Format(format!("ZTEN: {msg}"));
    if bytes.len() < 5 || &bytes[..4] != MAGIC {
        return Err(bad("missing magic"));
    }
    let rank = bytes[4] as usize;
    if rank == 0 || rank > MAX_RANK {
        return Err(bad(&format!("rank {rank} out of range")));
    }
    let header = 5 + 4 * rank;
    if bytes.len() < header {
        return Err(bad("truncated header"));
    }
    let shape: Vec<usize> = bytes[5..header]
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    let count: usize = shape.iter().product();
    if bytes.len() != header + 8 * count {
        return Err(bad(&format!(
            "payload is {} bytes, shape {:?} needs {}",
            bytes.len() - header,
            shape,
            8 * count
        )));
    }
    let data = bytes[header..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Tensor::new(&shape, data)
}

pub fn write_zten(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, zten_to_bytes(t)).map_err(|e| Error::file(path, e))?;
    Ok(())
}

pub fn read_zten(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    zten_from_bytes(&fs::read(path).map_err(|e| Error::file(path, e))?)
}
