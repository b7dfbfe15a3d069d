//! Portable field snapshots.
//!
//! Binary layout: three little-endian `u64` side lengths (all equal to `N`),
//! then `N^3` little-endian `f64` values in x-fastest order. A plain-text CSV
//! export with `x,y,z,value` rows is also provided.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::lattice::LatticeSpec;

pub fn write_field<W: Write>(mut w: W, lattice: &LatticeSpec, values: &[f64]) -> Result<()> {
    if values.len() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            got: values.len(),
        });
    }
    let n = lattice.n() as u64;
    for _ in 0..3 {
        w.write_all(&n.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads a snapshot, returning its side length and values.
pub fn read_field<R: Read>(mut r: R) -> Result<(usize, Vec<f64>)> {
    let mut header = [0u8; 24];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    let dims: Vec<u64> = header
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if dims[0] != dims[1] || dims[1] != dims[2] {
        return Err(Error::Format(format!("non-cubic header {dims:?}")));
    }
    let n = usize::try_from(dims[0]).map_err(|_| Error::Format("side length overflows".into()))?;
    let count = n
        .checked_mul(n)
        .and_then(|v| v.checked_mul(n))
        .ok_or_else(|| Error::Format("side length overflows".into()))?;
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != count * 8 {
        return Err(Error::Format(format!(
            "expected {} payload bytes, found {}",
            count * 8,
            body.len()
        )));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((n, values))
}

pub fn write_field_csv<W: Write>(mut w: W, lattice: &LatticeSpec, values: &[f64]) -> Result<()> {
    if values.len() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            got: values.len(),
        });
    }
    writeln!(w, "x,y,z,value")?;
    for (i, v) in values.iter().enumerate() {
        let [x, y, z] = lattice.unflatten(i);
        writeln!(w, "{x},{y},{z},{v:e}")?;
    }
    Ok(())
}
