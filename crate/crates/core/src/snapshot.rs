// Copyright 2026 EDP Contributors
// SPDX-License-Identifier: Apache-2.0

//! Binary snapshots of physical-space states.
//!
//! Layout, all little-endian: magic `EDPF`, `u32` version, `u32` dim, `u32` n,
//! `f64` half-length, `u32` component count, then `ncomp * n^dim` `f64` samples
//! component by component in grid order.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::state::State;

pub const MAGIC: &[u8; 4] = b"EDPF";
pub const VERSION: u32 = 1;
pub const HEADER_BYTES: usize = 28;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub dim: usize,
    pub n: usize,
    pub half_length: f64,
    pub ncomp: usize,
}

pub fn encode(grid: &Grid, u: &State) -> Result<Vec<u8>> {
    if u.comps.len() != grid.dim + 1 || u.comps.iter().any(|c| c.len() != grid.len()) {
        return Err(Error::ShapeMismatch(format!(
            "state has {} components of length {}, grid expects {} of length {}",
            u.comps.len(),
            u.comps.first().map_or(0, Vec::len),
            grid.dim + 1,
            grid.len()
        )));
    }
    let mut out = Vec::with_capacity(HEADER_BYTES + 8 * u.comps.len() * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n as u32).to_le_bytes());
    out.extend_from_slice(&grid.half_length.to_le_bytes());
    out.extend_from_slice(&(u.comps.len() as u32).to_le_bytes());
    for comp in &u.comps {
        for x in comp {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("slice of length 4"))
}

pub fn decode(bytes: &[u8]) -> Result<(SnapshotHeader, State)> {
    if bytes.len() < HEADER_BYTES {
        return Err(Error::CorruptSnapshot(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::CorruptSnapshot("bad magic".into()));
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::CorruptSnapshot(format!("unsupported version {version}")));
    }
    let header = SnapshotHeader {
        dim: u32_at(bytes, 8) as usize,
        n: u32_at(bytes, 12) as usize,
        half_length: f64::from_le_bytes(bytes[16..24].try_into().expect("slice of length 8")),
        ncomp: u32_at(bytes, 24) as usize,
    };
    if !(1..=3).contains(&header.dim) || header.ncomp != header.dim + 1 {
        return Err(Error::CorruptSnapshot(format!("dim {} with {} components", header.dim, header.ncomp)));
    }
    let len = header
        .n
        .checked_pow(header.dim as u32)
        .ok_or_else(|| Error::CorruptSnapshot("grid size overflows".into()))?;
    let payload = &bytes[HEADER_BYTES..];
    if payload.len() != 8 * header.ncomp * len {
        return Err(Error::CorruptSnapshot(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            8 * header.ncomp * len
        )));
    }
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let comps = (0..header.ncomp).map(|_| values.by_ref().take(len).collect()).collect();
    Ok((header, State { comps }))
}

pub fn write_snapshot(path: &Path, grid: &Grid, u: &State) -> Result<()> {
    let bytes = encode(grid, u)?;
    let mut file = fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

/// Reads a snapshot and checks it against the grid it will be used on.
pub fn read_snapshot(path: &Path, grid: &Grid) -> Result<State> {
    let (header, state) = decode(&fs::read(path)?)?;
    if header.dim != grid.dim || header.n != grid.n || header.half_length != grid.half_length {
        return Err(Error::ShapeMismatch(format!(
            "snapshot is d = {} n = {} L = {}, grid is d = {} n = {} L = {}",
            header.dim, header.n, header.half_length, grid.dim, grid.n, grid.half_length
        )));
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(grid: &Grid) -> State {
        let comps = (0..=grid.dim)
            .map(|c| (0..grid.len()).map(|i| ((i * 7 + c) as f64).sin() * 1e-3).collect())
            .collect();
        State { comps }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let grid = Grid::new(2, 8, 3.0).unwrap();
        let u = sample(&grid);
        let bytes = encode(&grid, &u).unwrap();
        assert_eq!(bytes.len(), HEADER_BYTES + 3 * 64 * 8);
        let (header, back) = decode(&bytes).unwrap();
        assert_eq!(header, SnapshotHeader { dim: 2, n: 8, half_length: 3.0, ncomp: 3 });
        for (x, y) in u.comps.iter().flatten().zip(back.comps.iter().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn corruption_is_detected() {
        let grid = Grid::new(1, 8, 3.0).unwrap();
        let bytes = encode(&grid, &sample(&grid)).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode(&bad), Err(Error::CorruptSnapshot(_))));
        assert!(matches!(decode(&bytes[..bytes.len() - 3]), Err(Error::CorruptSnapshot(_))));
        assert!(matches!(decode(&bytes[..10]), Err(Error::CorruptSnapshot(_))));
        let mut wrong_version = bytes;
        wrong_version[4] = 9;
        assert!(matches!(decode(&wrong_version), Err(Error::CorruptSnapshot(_))));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.edpf");
        let grid = Grid::new(1, 8, 3.0).unwrap();
        write_snapshot(&path, &grid, &sample(&grid)).unwrap();
        assert!(read_snapshot(&path, &grid).is_ok());
        let other = Grid::new(1, 16, 3.0).unwrap();
        assert!(matches!(read_snapshot(&path, &other), Err(Error::ShapeMismatch(_))));
        let wrong = State::zeros(2, 8);
        assert!(matches!(encode(&grid, &wrong), Err(Error::ShapeMismatch(_))));
    }
}
