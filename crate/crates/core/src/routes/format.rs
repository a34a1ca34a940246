//! `MMRT` binary table files and the CSV export.
//!
//! Binary layout, big-endian: magic `MMRT`, version byte, owner `u32`, entry
//! count `u32`, then per entry the prefix length byte, `ceil(len / 8)` prefix
//! bytes MSB-first and the next waypoint as `u32` (`0xFFFFFFFF` for an
//! explicit unreachable route).

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{RoutingEntry, RoutingTable};
use crate::addressing::GridAddress;
use crate::mapdata::BuildingId;

pub const TABLE_MAGIC: &[u8; 4] = b"MMRT";
pub const TABLE_VERSION: u8 = 1;
const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Error)]
pub enum TableFormatError {
    #[error("not a routing table file (bad magic)")]
    BadMagic,
    #[error("unsupported routing table version {0}")]
    BadVersion(u8),
    #[error("entry {0}: invalid prefix")]
    BadPrefix(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn write_table<W: Write>(t: &RoutingTable, mut out: W) -> io::Result<()> {
    out.write_all(TABLE_MAGIC)?;
    out.write_all(&[TABLE_VERSION])?;
    out.write_all(&t.owner.0.to_be_bytes())?;
    out.write_all(&(t.len() as u32).to_be_bytes())?;
    for e in t.entries() {
        out.write_all(&[e.prefix.len()])?;
        out.write_all(&e.prefix.to_bytes())?;
        let wp = e.next_waypoint.map_or(UNREACHABLE, |b| b.0);
        out.write_all(&wp.to_be_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_be_bytes(b))
}

pub fn read_table<R: Read>(mut r: R) -> Result<RoutingTable, TableFormatError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TABLE_MAGIC {
        return Err(TableFormatError::BadMagic);
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)?;
    if version[0] != TABLE_VERSION {
        return Err(TableFormatError::BadVersion(version[0]));
    }
    let owner = BuildingId(read_u32(&mut r)?);
    let count = read_u32(&mut r)? as usize;
    let mut entries = Vec::with_capacity(count.min(1 << 16));
    for i in 0..count {
        let mut len = [0u8; 1];
        r.read_exact(&mut len)?;
        let mut bytes = vec![0u8; len[0].div_ceil(8) as usize];
        r.read_exact(&mut bytes)?;
        let prefix = GridAddress::from_bytes(&bytes, len[0]).ok_or(TableFormatError::BadPrefix(i))?;
        let wp = read_u32(&mut r)?;
        entries.push(RoutingEntry {
            prefix,
            next_waypoint: (wp != UNREACHABLE).then_some(BuildingId(wp)),
        });
    }
    Ok(RoutingTable::new(owner, entries))
}

/// CSV `owner,prefix,len,next_waypoint`; the default prefix is an empty
/// field and an unreachable route is `-`.
pub fn write_tables_csv<'a, W: Write>(
    tables: impl IntoIterator<Item = &'a RoutingTable>,
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "owner,prefix,len,next_waypoint")?;
    for t in tables {
        for e in t.entries() {
            match e.next_waypoint {
                Some(w) => writeln!(out, "{},{},{},{}", t.owner, e.prefix, e.prefix.len(), w)?,
                None => writeln!(out, "{},{},{},-", t.owner, e.prefix, e.prefix.len())?,
            }
        }
    }
    Ok(())
}
