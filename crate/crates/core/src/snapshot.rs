//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content                                   |
//! |--------|------|-------------------------------------------|
//! | 0      | 4    | magic `LLSN`                              |
//! | 4      | 8    | `n` as u64                                |
//! | 12     | 8    | box length `L` as f64                     |
//! | 20     | 4    | kind tag: `MAG3`, `CPLX` or `REAL`        |
//! | 24     | ...  | f64 samples                               |
//!
//! `MAG3` stores the three components as consecutive blocks (`m1`, then
//! `m2`, then `m3`), `CPLX` interleaves `re, im` per node, `REAL` stores the
//! `n` samples directly.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fields::Magnetization;
use crate::spectral::{ComplexField, Grid, RealField};

pub const MAGIC: &[u8; 4] = b"LLSN";
const HEADER_LEN: usize = 24;

#[derive(Clone, Debug, PartialEq)]
pub enum Snapshot {
    Magnetization(Magnetization),
    Wave(ComplexField),
    Real(RealField),
}

impl Snapshot {
    pub fn kind_tag(&self) -> &'static [u8; 4] {
        match self {
            Snapshot::Magnetization(_) => b"MAG3",
            Snapshot::Wave(_) => b"CPLX",
            Snapshot::Real(_) => b"REAL",
        }
    }

    pub fn grid(&self) -> &Grid {
        match self {
            Snapshot::Magnetization(m) => m.grid(),
            Snapshot::Wave(w) => w.grid(),
            Snapshot::Real(r) => r.grid(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let grid = self.grid();
        let mut out = Vec::with_capacity(HEADER_LEN + 24 * grid.n());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(grid.n() as u64).to_le_bytes());
        out.extend_from_slice(&grid.length().to_le_bytes());
        out.extend_from_slice(self.kind_tag());
        let mut push = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        match self {
            Snapshot::Magnetization(m) => m.comps().iter().flatten().for_each(|&v| push(v)),
            Snapshot::Wave(w) => w.values().iter().for_each(|z| {
                push(z.re);
                push(z.im);
            }),
            Snapshot::Real(r) => r.values().iter().for_each(|&v| push(v)),
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Snapshot(format!(
                "{} bytes is shorter than the header",
                bytes.len()
            )));
        }
        if &bytes[0..4] != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let n = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes")) as usize;
        let length = f64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
        let kind: [u8; 4] = bytes[20..24].try_into().expect("4 bytes");
        let per_node = match &kind {
            b"MAG3" => 3,
            b"CPLX" => 2,
            b"REAL" => 1,
            other => {
                return Err(Error::Snapshot(format!(
                    "unknown field kind {:?}",
                    String::from_utf8_lossy(other)
                )))
            }
        };
        let expected = n
            .checked_mul(8 * per_node)
            .and_then(|b| b.checked_add(HEADER_LEN))
            .ok_or_else(|| Error::Snapshot(format!("n = {n} overflows")))?;
        if bytes.len() != expected {
            return Err(Error::Snapshot(format!(
                "expected {expected} bytes for n = {n}, found {}",
                bytes.len()
            )));
        }
        let grid = Grid::new(n, length)?;
        let samples: Vec<f64> = bytes[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(match &kind {
            b"MAG3" => Snapshot::Magnetization(Magnetization::new(
                grid,
                samples[..n].to_vec(),
                samples[n..2 * n].to_vec(),
                samples[2 * n..].to_vec(),
            )?),
            b"CPLX" => Snapshot::Wave(ComplexField::new(
                grid,
                samples
                    .chunks_exact(2)
                    .map(|c| Complex64::new(c[0], c[1]))
                    .collect(),
            )?),
            _ => Snapshot::Real(RealField::new(grid, samples)?),
        })
    }
}

pub fn write_snapshot(path: impl AsRef<Path>, snapshot: &Snapshot) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, snapshot.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Snapshot::from_bytes(&bytes)
}
