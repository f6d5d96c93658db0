//! The CHQF binary field format.
//!
//! Layout (all integers and floats little-endian):
//!   magic `CHQF` | u32 version = 1 | u8 N | N x u64 dims |
//!   f64 spacing | N x f64 origin | dims-product f64 values,
//!   row-major, last axis fastest.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"CHQF";
const VERSION: u32 = 1;

pub fn write_chqf(field: &Field, path: &Path) -> Result<()> {
    let grid = field.grid();
    let n = grid.dim();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&[n as u8])?;
    for _ in 0..n {
        w.write_all(&(grid.points_per_axis() as u64).to_le_bytes())?;
    }
    w.write_all(&grid.spacing().to_le_bytes())?;
    for _ in 0..n {
        w.write_all(&(-grid.half_width()).to_le_bytes())?;
    }
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_chqf(path: &Path) -> Result<Field> {
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?} in {}",
            magic,
            path.display()
        )));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)?;
    let version = u32::from_le_bytes(buf4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut buf1 = [0u8; 1];
    r.read_exact(&mut buf1)?;
    let n = buf1[0] as usize;

    let mut buf8 = [0u8; 8];
    let mut dims = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf8)?;
        dims.push(u64::from_le_bytes(buf8) as usize);
    }
    r.read_exact(&mut buf8)?;
    let spacing = f64::from_le_bytes(buf8);
    let mut origin = Vec::with_capacity(n);
    for _ in 0..n {
        r.read_exact(&mut buf8)?;
        origin.push(f64::from_le_bytes(buf8));
    }

    if dims.is_empty() || dims.iter().any(|&d| d != dims[0]) {
        return Err(Error::Format(format!(
            "only cubic grids are supported, got dims {dims:?}"
        )));
    }
    let m = dims[0];
    let half_width = m as f64 * spacing / 2.0;
    for (axis, &o) in origin.iter().enumerate() {
        if (o + half_width).abs() > 1e-9 * half_width.max(1.0) {
            return Err(Error::Format(format!(
                "origin[{axis}] = {o} does not describe a centered box of half-width {half_width}"
            )));
        }
    }
    let grid = Grid::new(n, m, half_width)
        .map_err(|e| Error::Format(format!("grid in file not representable: {e}")))?;

    let total: usize = dims.iter().product();
    let mut values = vec![0.0f64; total];
    for v in values.iter_mut() {
        r.read_exact(&mut buf8)?;
        *v = f64::from_le_bytes(buf8);
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    Field::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = Grid::new(3, 8, 2.5).unwrap();
        let field = Field::from_fn(grid, |x| x[0] * 1.1 + (x[1] * x[2]).sin() + 1e-17);
        let dir = std::env::temp_dir().join("chqf_round_trip_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.chqf");
        write_chqf(&field, &path).unwrap();
        let back = read_chqf(&path).unwrap();
        assert_eq!(back, field);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = std::env::temp_dir().join("chqf_bad_magic_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("junk.chqf");
        std::fs::write(&path, b"JUNKxxxxxxxxxxxxxxxx").unwrap();
        assert!(matches!(read_chqf(&path), Err(Error::Format(_))));
        std::fs::remove_file(&path).ok();
    }
}
