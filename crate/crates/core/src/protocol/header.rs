use thiserror::Error;

use crate::addressing::GridAddress;
use crate::mapdata::BuildingId;

pub const HEADER_VERSION: u8 = 1;
/// Encoded size without the destination payload bytes.
pub const FIXED_HEADER_BYTES: usize = 1 + 1 + 4 + 4 + 4 + 4 + 4 + 1 + 2;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeaderError {
    #[error("header truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("unsupported header version {0}")]
    BadVersion(u8),
    #[error("destination length {0} exceeds 64 bits")]
    DestTooLong(u8),
    #[error("destination padding bits are not zero")]
    BadPadding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PacketHeader {
    pub version: u8,
    pub flags: u8,
    pub source: BuildingId,
    pub seq: u32,
    /// Building of the most recent broadcaster.
    pub sender: BuildingId,
    pub prev_waypoint: BuildingId,
    pub next_waypoint: BuildingId,
    pub dest: GridAddress,
    pub hop_budget: u16,
}

impl PacketHeader {
    pub fn encoded_len(&self) -> usize {
        FIXED_HEADER_BYTES + self.dest.len().div_ceil(8) as usize
    }
}

/// Big-endian, fields in declaration order; the destination is a length
/// byte followed by its bits MSB-first.
pub fn encode_header(h: &PacketHeader) -> Vec<u8> {
    let mut out = Vec::with_capacity(h.encoded_len());
    out.push(h.version);
    out.push(h.flags);
    for v in [h.source.0, h.seq, h.sender.0, h.prev_waypoint.0, h.next_waypoint.0] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.push(h.dest.len());
    out.extend_from_slice(&h.dest.to_bytes());
    out.extend_from_slice(&h.hop_budget.to_be_bytes());
    out
}

/// Decodes the header at the start of `buf`; trailing bytes are payload and
/// are ignored.
pub fn decode_header(buf: &[u8]) -> Result<PacketHeader, HeaderError> {
    let truncated = |need: usize| HeaderError::Truncated {
        need,
        have: buf.len(),
    };
    if buf.len() < FIXED_HEADER_BYTES {
        return Err(truncated(FIXED_HEADER_BYTES));
    }
    if buf[0] != HEADER_VERSION {
        return Err(HeaderError::BadVersion(buf[0]));
    }
    let u32_at = |i: usize| u32::from_be_bytes(buf[i..i + 4].try_into().unwrap());
    let dest_len = buf[22];
    if dest_len > 64 {
        return Err(HeaderError::DestTooLong(dest_len));
    }
    let dest_bytes = dest_len.div_ceil(8) as usize;
    let need = FIXED_HEADER_BYTES + dest_bytes;
    if buf.len() < need {
        return Err(truncated(need));
    }
    let dest = GridAddress::from_bytes(&buf[23..23 + dest_bytes], dest_len).ok_or(HeaderError::BadPadding)?;
    let hb = 23 + dest_bytes;
    Ok(PacketHeader {
        version: buf[0],
        flags: buf[1],
        source: BuildingId(u32_at(2)),
        seq: u32_at(6),
        sender: BuildingId(u32_at(10)),
        prev_waypoint: BuildingId(u32_at(14)),
        next_waypoint: BuildingId(u32_at(18)),
        dest,
        hop_budget: u16::from_be_bytes([buf[hb], buf[hb + 1]]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero_header() -> PacketHeader {
        PacketHeader {
            version: HEADER_VERSION,
            flags: 0,
            source: BuildingId(0),
            seq: 0,
            sender: BuildingId(0),
            prev_waypoint: BuildingId(0),
            next_waypoint: BuildingId(0),
            dest: GridAddress::new(0, 8),
            hop_budget: 0,
        }
    }

    #[test]
    fn golden_zero_header() {
        let bytes = encode_header(&zero_header());
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(hex, "0100000000000000000000000000000000000000000008000000");
        assert_eq!(bytes.len(), 26);
        assert_eq!(decode_header(&bytes).unwrap(), zero_header());
    }

    #[test]
    fn truncation_and_version_errors() {
        let bytes = encode_header(&zero_header());
        assert_eq!(
            decode_header(&bytes[..23]),
            Err(HeaderError::Truncated { need: 25, have: 23 })
        );
        assert!(matches!(decode_header(&bytes[..25]), Err(HeaderError::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = 9;
        assert_eq!(decode_header(&bad), Err(HeaderError::BadVersion(9)));
        let mut long = bytes.clone();
        long[22] = 65;
        assert_eq!(decode_header(&long), Err(HeaderError::DestTooLong(65)));
        let mut pad = bytes;
        pad[22] = 3;
        pad[23] = 0x01;
        assert_eq!(decode_header(&pad), Err(HeaderError::BadPadding));
    }

    #[test]
    fn payload_after_header_is_ignored() {
        let mut bytes = encode_header(&zero_header());
        bytes.extend_from_slice(b"payload");
        assert_eq!(decode_header(&bytes).unwrap(), zero_header());
    }

    proptest! {
        #[test]
        fn roundtrip(
            flags: u8, source: u32, seq: u32, sender: u32, prev: u32, next: u32,
            bits: u64, len in 0u8..=64, hop_budget: u16,
        ) {
            let h = PacketHeader {
                version: HEADER_VERSION,
                flags,
                source: BuildingId(source),
                seq,
                sender: BuildingId(sender),
                prev_waypoint: BuildingId(prev),
                next_waypoint: BuildingId(next),
                dest: GridAddress::new(bits, len),
                hop_budget,
            };
            let bytes = encode_header(&h);
            prop_assert_eq!(bytes.len(), h.encoded_len());
            prop_assert_eq!(decode_header(&bytes).unwrap(), h);
        }
    }
}
