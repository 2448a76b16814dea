//! Field snapshot files: magic `LPNSE1`, `n` (u64 LE), `box_length` (f64 LE),
//! component count (u64 LE), then per component the `n^3` physical values as
//! f64 LE, row-major with `x_1` slowest. Round-trips are bit-exact.

use crate::error::{Error, Result};
use crate::field::PhysicalField;
use crate::grid::Grid;
use ndarray::Array3;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 6] = b"LPNSE1";

pub fn write_snapshot(path: &Path, components: &[PhysicalField]) -> Result<()> {
    if components.is_empty() {
        return Err(Error::Parameter("snapshot needs at least one component".into()));
    }
    let grid = components[0].grid();
    if components.iter().any(|c| c.grid() != grid) {
        return Err(Error::DimensionMismatch {
            expected: "components on a single grid".into(),
            got: "mixed grids".into(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(grid.n() as u64).to_le_bytes())?;
    w.write_all(&grid.box_length().to_le_bytes())?;
    w.write_all(&(components.len() as u64).to_le_bytes())?;
    for c in components {
        // standard layout: iteration order is row-major, x_1 slowest
        for v in c.values().iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Vec<PhysicalField>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::SnapshotFormat(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let mut buf8 = [0u8; 8];
    r.read_exact(&mut buf8)?;
    let n = u64::from_le_bytes(buf8) as usize;
    r.read_exact(&mut buf8)?;
    let box_length = f64::from_le_bytes(buf8);
    r.read_exact(&mut buf8)?;
    let count = u64::from_le_bytes(buf8) as usize;
    if count == 0 || count > 16 {
        return Err(Error::SnapshotFormat(format!(
            "implausible component count {count}"
        )));
    }
    let grid = Grid::new(n, box_length)
        .map_err(|e| Error::SnapshotFormat(format!("bad grid header: {e}")))?;
    let mut fields = Vec::with_capacity(count);
    for _ in 0..count {
        let mut values = Array3::zeros((n, n, n));
        for v in values.iter_mut() {
            r.read_exact(&mut buf8)?;
            *v = f64::from_le_bytes(buf8);
        }
        fields.push(PhysicalField::new(grid.clone(), values)?);
    }
    // trailing bytes indicate corruption
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(Error::SnapshotFormat("trailing bytes after payload".into()));
    }
    Ok(fields)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = Grid::cubic(8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fields: Vec<PhysicalField> = (0..3)
            .map(|_| {
                let values =
                    Array3::from_shape_fn((8, 8, 8), |_| rng.random_range(-10.0..10.0_f64));
                PhysicalField::new(grid.clone(), values).unwrap()
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.lpnse");
        write_snapshot(&path, &fields).unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in fields.iter().zip(back.iter()) {
            for (x, y) in a.values().iter().zip(b.values().iter()) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.lpnse");
        std::fs::write(&path, b"NOTLPNSE").unwrap();
        assert!(matches!(
            read_snapshot(&path),
            Err(Error::SnapshotFormat(_)) | Err(Error::Io(_))
        ));
    }
}
