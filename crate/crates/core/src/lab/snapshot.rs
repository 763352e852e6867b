//! Binary snapshot files: `CPL1`, `u32` point count, `f64` time, `f64` hull
//! offset, then the values. Everything little endian.

use std::io::{self, Read, Write};

use crate::spectral::{CircleGrid, Field};

pub const MAGIC: &[u8; 4] = b"CPL1";

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotRecord {
    pub t: f64,
    pub tau: f64,
    pub values: Vec<f64>,
}

impl SnapshotRecord {
    pub fn into_field(self, grid: &CircleGrid) -> crate::Result<Field> {
        Field::new(grid, self.values)
    }
}

pub fn write_snapshot<W: Write>(mut w: W, t: f64, tau: f64, u: &Field) -> io::Result<()> {
    let n = u32::try_from(u.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "field too large"))?;
    let mut buf = Vec::with_capacity(24 + 8 * u.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&n.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&tau.to_le_bytes());
    for v in u.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(mut r: R) -> io::Result<SnapshotRecord> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad snapshot magic"));
    }
    let mut nb = [0u8; 4];
    r.read_exact(&mut nb)?;
    let n = u32::from_le_bytes(nb) as usize;
    let t = read_f64(&mut r)?;
    let tau = read_f64(&mut r)?;
    let values = (0..n).map(|_| read_f64(&mut r)).collect::<io::Result<Vec<_>>>()?;
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "trailing bytes after snapshot",
        ));
    }
    Ok(SnapshotRecord { t, tau, values })
}
