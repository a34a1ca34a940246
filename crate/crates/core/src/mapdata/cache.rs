//! Native binary map cache.
//!
//! Layout (little-endian): magic `MMAP`, version byte, `u32` building count,
//! then per building a `u32` vertex count followed by `f64` x/y pairs. Only
//! footprints are stored; centroids, areas and ids are recomputed on load.

use std::io::{Read, Write};

use super::{Building, BuildingMap, MapError, Point};

pub const CACHE_MAGIC: &[u8; 4] = b"MMAP";
pub const CACHE_VERSION: u8 = 1;

pub fn write_cache<W: Write>(map: &BuildingMap, mut out: W) -> Result<(), MapError> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CACHE_MAGIC);
    buf.push(CACHE_VERSION);
    buf.extend_from_slice(&(map.len() as u32).to_le_bytes());
    for b in map.buildings() {
        buf.extend_from_slice(&(b.footprint.len() as u32).to_le_bytes());
        for p in &b.footprint {
            buf.extend_from_slice(&p.x.to_le_bytes());
            buf.extend_from_slice(&p.y.to_le_bytes());
        }
    }
    out.write_all(&buf)?;
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], MapError> {
        let end = self.pos + n;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| MapError::Cache(format!("truncated at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, MapError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, MapError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_cache<R: Read>(mut input: R) -> Result<BuildingMap, MapError> {
    let mut buf = Vec::new();
    input.read_to_end(&mut buf)?;
    let mut cur = Cursor { buf: &buf, pos: 0 };
    if cur.take(4)? != CACHE_MAGIC {
        return Err(MapError::Cache("bad magic".into()));
    }
    let version = cur.take(1)?[0];
    if version != CACHE_VERSION {
        return Err(MapError::Cache(format!("unsupported version {version}")));
    }
    let n = cur.u32()? as usize;
    let mut buildings = Vec::with_capacity(n.min(1 << 20));
    for i in 0..n {
        let nv = cur.u32()? as usize;
        let mut ring = Vec::with_capacity(nv.min(1 << 16));
        for _ in 0..nv {
            let x = cur.f64()?;
            let y = cur.f64()?;
            ring.push(Point::new(x, y));
        }
        buildings.push(Building::from_ring(i, ring, None)?);
    }
    if cur.pos != buf.len() {
        return Err(MapError::Cache("trailing bytes".into()));
    }
    Ok(BuildingMap::new(buildings))
}
