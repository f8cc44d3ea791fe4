//! Binary field snapshots and CSV profile export.
//!
//! Layout (little endian): magic `INLS`, version `u32`, mode `u8`
//! (0 Cartesian, 1 radial uniform, 2 radial square-root stretched),
//! dimension `u8`, one `u32` point count per stored axis, extent `f64`,
//! weight exponent `b` as `f64`, time `f64`, then `(re, im)` pairs of `f64`
//! in row-major order.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::{Grid, GridMode, GridSpec};
use crate::error::{GridError, SnapshotError};

pub const MAGIC: [u8; 4] = *b"INLS";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMeta {
    pub spec: GridSpec,
    pub b: f64,
    pub time: f64,
}

fn mode_byte(mode: GridMode) -> u8 {
    match mode {
        GridMode::Cartesian2d => 0,
        GridMode::Radial { stretch } => stretch as u8,
    }
}

pub fn write_snapshot<W: Write>(
    mut w: W,
    field: &SpectralField,
    b: f64,
    time: f64,
) -> Result<(), SnapshotError> {
    let spec = field.grid().spec();
    let mut buf = Vec::with_capacity(40 + 16 * field.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(mode_byte(spec.mode));
    buf.push(spec.dimension as u8);
    let axes = match spec.mode {
        GridMode::Cartesian2d => 2,
        GridMode::Radial { .. } => 1,
    };
    for _ in 0..axes {
        buf.extend_from_slice(&(spec.points as u32).to_le_bytes());
    }
    buf.extend_from_slice(&spec.extent.to_le_bytes());
    buf.extend_from_slice(&b.to_le_bytes());
    buf.extend_from_slice(&time.to_le_bytes());
    for z in field.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn save_snapshot(
    path: impl AsRef<Path>,
    field: &SpectralField,
    b: f64,
    time: f64,
) -> Result<(), SnapshotError> {
    let file = std::fs::File::create(path)?;
    write_snapshot(std::io::BufWriter::new(file), field, b, time)
}

fn take<const K: usize>(bytes: &[u8], pos: &mut usize) -> Result<[u8; K], SnapshotError> {
    let out = bytes
        .get(*pos..*pos + K)
        .ok_or(SnapshotError::Truncated {
            expected: *pos + K,
            found: bytes.len(),
        })?
        .try_into()
        .unwrap();
    *pos += K;
    Ok(out)
}

/// Reads a snapshot. When `grid` matches the stored geometry it is reused,
/// otherwise a new grid is built from the header.
pub fn read_snapshot<R: Read>(
    mut r: R,
    grid: Option<&Grid>,
) -> Result<(SpectralField, SnapshotMeta), SnapshotError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut pos = 0;
    let magic = take::<4>(&bytes, &mut pos)?;
    if magic != MAGIC {
        return Err(SnapshotError::BadMagic(magic));
    }
    let version = u32::from_le_bytes(take::<4>(&bytes, &mut pos)?);
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion(version));
    }
    let mode = take::<1>(&bytes, &mut pos)?[0];
    let dimension = take::<1>(&bytes, &mut pos)?[0] as usize;
    let (mode, axes) = match mode {
        0 => (GridMode::Cartesian2d, 2),
        1 | 2 => (GridMode::Radial { stretch: mode as u32 }, 1),
        other => return Err(SnapshotError::UnknownMode(other)),
    };
    let mut counts = Vec::new();
    for _ in 0..axes {
        counts.push(u32::from_le_bytes(take::<4>(&bytes, &mut pos)?) as usize);
    }
    if counts.iter().any(|&c| c != counts[0]) {
        return Err(GridError::BadPointCount(counts[1]).into());
    }
    let extent = f64::from_le_bytes(take::<8>(&bytes, &mut pos)?);
    let b = f64::from_le_bytes(take::<8>(&bytes, &mut pos)?);
    let time = f64::from_le_bytes(take::<8>(&bytes, &mut pos)?);
    let spec = GridSpec {
        mode,
        dimension,
        extent,
        points: counts[0],
    };
    let grid = match grid {
        Some(g) if g.spec() == spec => g.clone(),
        _ => Grid::new(spec)?,
    };
    let expected = grid.len();
    let found = (bytes.len() - pos) / 16;
    if found != expected || (bytes.len() - pos) % 16 != 0 {
        return Err(SnapshotError::Truncated { expected, found });
    }
    let values = bytes[pos..]
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let field = SpectralField::new(grid, values)?;
    Ok((field, SnapshotMeta { spec, b, time }))
}

pub fn load_snapshot(
    path: impl AsRef<Path>,
    grid: Option<&Grid>,
) -> Result<(SpectralField, SnapshotMeta), SnapshotError> {
    read_snapshot(std::fs::File::open(path)?, grid)
}

/// Radial profile as CSV: `r,re,im,abs`. Cartesian fields are sampled along
/// the positive first axis through the origin.
pub fn write_profile_csv<W: Write>(mut w: W, field: &SpectralField) -> std::io::Result<()> {
    writeln!(w, "r,re,im,abs")?;
    let grid = field.grid();
    if grid.is_radial() {
        for (r, z) in grid.radii().iter().zip(field.values()) {
            writeln!(w, "{:e},{:e},{:e},{:e}", r, z.re, z.im, z.norm())?;
        }
    } else {
        let n = grid.points();
        for i0 in n / 2..n {
            let idx = i0 * n + n / 2;
            let z = field.values()[idx];
            writeln!(w, "{:e},{:e},{:e},{:e}", grid.radii()[idx], z.re, z.im, z.norm())?;
        }
    }
    Ok(())
}
