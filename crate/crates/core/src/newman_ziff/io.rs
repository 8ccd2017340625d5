//! Binary container and CSV exports for simulation tables.
//!
//! Container layout, all integers little-endian:
//!
//! ```text
//! magic   5 bytes  "NZMC1"
//! kind    u8       1 = microcanonical table, 2 = max-cluster distribution
//! side    u32
//! trials  u64
//! kind 1: seed u64 | kind 2: p f64
//! edges   u32 count, then that many u32 thresholds
//! kind 1: (N² + 1) * count u32 exceedance counts, row-major by n
//! kind 2: count f64 survival values
//! ```

use std::io::{Read, Write};

use super::{MaxClusterDistribution, MicroCanonicalTable, ThresholdGrid};
use crate::error::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 5] = b"NZMC1";

const KIND_MICRO: u8 = 1;
const KIND_DIST: u8 = 2;

#[derive(Debug, Clone, PartialEq)]
pub enum Container {
    Micro(MicroCanonicalTable),
    Distribution(MaxClusterDistribution),
}

fn write_grid(w: &mut impl Write, grid: &ThresholdGrid) -> Result<()> {
    w.write_all(&(grid.len() as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(grid.len() * 4);
    for e in grid.edges() {
        buf.extend_from_slice(&e.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

impl MicroCanonicalTable {
    pub fn write_container(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CONTAINER_MAGIC)?;
        w.write_all(&[KIND_MICRO])?;
        w.write_all(&(self.side() as u32).to_le_bytes())?;
        w.write_all(&self.trials().to_le_bytes())?;
        w.write_all(&self.seed().to_le_bytes())?;
        write_grid(w, self.grid())?;
        let mut buf = Vec::with_capacity(self.raw_counts().len() * 4);
        for c in self.raw_counts() {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Long-format CSV: one row per `(n, t)` pair with the exceedance count.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_or_t,t,count_or_survival\n");
        for n in 0..=self.sites() {
            for (t, c) in self.grid().edges().iter().zip(self.row(n)) {
                out.push_str(&format!("{n},{t},{c}\n"));
            }
        }
        out
    }
}

impl MaxClusterDistribution {
    pub fn write_container(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(CONTAINER_MAGIC)?;
        w.write_all(&[KIND_DIST])?;
        w.write_all(&(self.side() as u32).to_le_bytes())?;
        w.write_all(&self.trials().to_le_bytes())?;
        w.write_all(&self.p().to_le_bytes())?;
        write_grid(w, self.grid())?;
        let mut buf = Vec::with_capacity(self.grid().len() * 8);
        for s in self.survival_values() {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// `t, S(t)` per grid edge.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n_or_t,count_or_survival\n");
        for (t, s) in self.points() {
            out.push_str(&format!("{t},{s}\n"));
        }
        out
    }
}

struct Reader<'a, R: Read>(&'a mut R);

impl<R: Read> Reader<'_, R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated container".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn u32_vec(&mut self, len: usize) -> Result<Vec<u32>> {
        let mut raw = vec![0u8; len * 4];
        self.0.read_exact(&mut raw).map_err(|_| Error::Format("truncated container".into()))?;
        Ok(raw.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect())
    }
}

pub fn read_container(r: &mut impl Read) -> Result<Container> {
    let mut rd = Reader(r);
    let magic: [u8; 5] = rd.bytes()?;
    if &magic != CONTAINER_MAGIC {
        return Err(Error::Format("missing NZMC1 magic".into()));
    }
    let [kind] = rd.bytes::<1>()?;
    let side = rd.u32()? as usize;
    let trials = rd.u64()?;
    match kind {
        KIND_MICRO => {
            let seed = rd.u64()?;
            let k = rd.u32()? as usize;
            let grid = ThresholdGrid::from_edges(rd.u32_vec(k)?)?;
            let rows = side
                .checked_mul(side)
                .and_then(|s| s.checked_add(1))
                .and_then(|r| r.checked_mul(k))
                .ok_or_else(|| Error::Format("table dimensions overflow".into()))?;
            let counts = rd.u32_vec(rows)?;
            Ok(Container::Micro(MicroCanonicalTable::from_parts(side, trials, seed, grid, counts)?))
        }
        KIND_DIST => {
            let p = rd.f64()?;
            let k = rd.u32()? as usize;
            let grid = ThresholdGrid::from_edges(rd.u32_vec(k)?)?;
            let survival = (0..k).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
            Ok(Container::Distribution(MaxClusterDistribution::from_parts(side, p, trials, grid, survival)?))
        }
        other => Err(Error::Format(format!("unknown container kind {other}"))),
    }
}
