//! Field file format: one JSON header line
//! `{"nx":…,"ny":…,"h":…,"origin":[…],"domain_hash":…}`
//! followed by nx·ny little-endian f64 in row-major order, exterior nodes
//! stored as NaN.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use holepoint_core::elliptic::Field;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub domain_hash: u64,
}

/// FNV-1a 64-bit hash of the canonical domain description.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub fn write_field(path: &Path, field: &Field, domain_hash: u64) -> Result<()> {
    let g = field.grid();
    let header = FieldHeader {
        nx: g.nx,
        ny: g.ny,
        h: g.h,
        origin: g.origin,
        domain_hash,
    };
    let mut f = std::fs::File::create(path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer(&mut f, &header)?;
    f.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(8 * g.len());
    for &v in field.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&buf)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(FieldHeader, Vec<f64>)> {
    let f = std::fs::File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = BufReader::new(f);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: FieldHeader =
        serde_json::from_str(line.trim_end()).context("bad field header")?;
    let n = header.nx * header.ny;
    let mut bytes = Vec::with_capacity(8 * n);
    reader.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * n {
        bail!("field payload has {} bytes, expected {}", bytes.len(), 8 * n);
    }
    let mut values = Vec::with_capacity(n);
    for c in bytes.chunks_exact(8) {
        values.push(f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
    }
    Ok((header, values))
}
