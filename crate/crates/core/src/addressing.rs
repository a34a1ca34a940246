//! Hierarchical grid addresses.
//!
//! The map bounds, padded to a square, are halved along both axes until a
//! cell side is at most the target size. At each level the x bit is emitted
//! before the y bit; 0 is the lower half and a centroid on the split line
//! goes to the upper half. A building's address is its cell prefix followed
//! by its rank (in building-id order) among the cell's buildings, written in
//! `ceil(log2(population))` bits.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mapdata::{BuildingId, BuildingMap, Point};

pub const DEFAULT_CELL_TARGET_M: f64 = 100.0;
pub const MAX_ADDRESS_BITS: u8 = 64;

#[derive(Debug, Error, PartialEq)]
pub enum AddressError {
    #[error("cell target must be positive")]
    BadTarget,
    #[error("grid would need {bits} address bits; the limit is 64")]
    TooDeep { bits: u32 },
    #[error("unknown building {0}")]
    UnknownBuilding(BuildingId),
    #[error("invalid address literal {0:?}")]
    Parse(String),
}

/// Bitstring of up to 64 bits. The string's first bit is the most
/// significant of the low `len` bits of `bits`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct GridAddress {
    bits: u64,
    len: u8,
}

fn low_mask(len: u8) -> u64 {
    if len >= 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

impl GridAddress {
    pub const EMPTY: GridAddress = GridAddress { bits: 0, len: 0 };

    /// Panics when `len > 64`; bits above `len` are discarded.
    pub fn new(bits: u64, len: u8) -> Self {
        assert!(len <= MAX_ADDRESS_BITS, "address longer than 64 bits");
        Self {
            bits: bits & low_mask(len),
            len,
        }
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> u8 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit `i` counted from the start of the string.
    pub fn bit(&self, i: u8) -> bool {
        debug_assert!(i < self.len);
        (self.bits >> (self.len - 1 - i)) & 1 == 1
    }

    pub fn push(self, bit: bool) -> Self {
        assert!(self.len < MAX_ADDRESS_BITS, "address longer than 64 bits");
        Self {
            bits: (self.bits << 1) | bit as u64,
            len: self.len + 1,
        }
    }

    pub fn concat(self, tail: GridAddress) -> Self {
        let len = self.len as u32 + tail.len as u32;
        assert!(len <= MAX_ADDRESS_BITS as u32, "address longer than 64 bits");
        if tail.len == 0 {
            return self;
        }
        let head = if tail.len >= 64 { 0 } else { self.bits << tail.len };
        Self {
            bits: head | tail.bits,
            len: len as u8,
        }
    }

    /// The first `n` bits.
    pub fn prefix(&self, n: u8) -> Self {
        assert!(n <= self.len);
        if n == 0 {
            return Self::EMPTY;
        }
        Self {
            bits: self.bits >> (self.len - n),
            len: n,
        }
    }

    pub fn is_prefix_of(&self, other: &GridAddress) -> bool {
        self.len <= other.len && other.prefix(self.len).bits == self.bits
    }

    /// Bits packed MSB-first into `ceil(len / 8)` bytes, zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8) as usize;
        if n == 0 {
            return Vec::new();
        }
        let aligned = self.bits << (64 - self.len as u32);
        aligned.to_be_bytes()[..n].to_vec()
    }

    pub fn from_bytes(bytes: &[u8], len: u8) -> Option<Self> {
        if len > MAX_ADDRESS_BITS || bytes.len() != len.div_ceil(8) as usize {
            return None;
        }
        if len == 0 {
            return Some(Self::EMPTY);
        }
        let mut buf = [0u8; 8];
        buf[..bytes.len()].copy_from_slice(bytes);
        let aligned = u64::from_be_bytes(buf);
        if aligned & !(u64::MAX << (64 - len as u32)) != 0 {
            return None;
        }
        Some(Self {
            bits: aligned >> (64 - len as u32),
            len,
        })
    }
}

impl fmt::Display for GridAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for GridAddress {
    type Err = AddressError;

    /// Accepts a binary string, optionally split by `/` and spaces.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut a = GridAddress::EMPTY;
        for c in s.chars() {
            match c {
                '0' | '1' if a.len < MAX_ADDRESS_BITS => a = a.push(c == '1'),
                '/' | ' ' => {}
                _ => return Err(AddressError::Parse(s.to_string())),
            }
        }
        Ok(a)
    }
}

/// Leaf cell, numbered by its prefix value (x/y bit interleaving).
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct CellId(pub u32);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridIndex {
    origin: Point,
    side: f64,
    depth: u8,
    /// CSR layout: buildings of cell `c` are `members[cell_start[c]..cell_start[c + 1]]`.
    cell_start: Vec<u32>,
    members: Vec<BuildingId>,
    building_cell: Vec<CellId>,
    addresses: Vec<GridAddress>,
}

fn bits_for_population(pop: usize) -> u8 {
    if pop <= 1 {
        0
    } else {
        (usize::BITS - (pop - 1).leading_zeros()) as u8
    }
}

pub fn build_grid(map: &BuildingMap, cell_target: f64) -> Result<GridIndex, AddressError> {
    if !(cell_target > 0.0) {
        return Err(AddressError::BadTarget);
    }
    let b = map.bounds();
    let (origin, side) = if map.is_empty() {
        (Point::default(), 0.0)
    } else {
        (Point::new(b.min_x, b.min_y), b.width().max(b.height()))
    };
    let mut depth: u32 = 0;
    while side / (1u64 << depth) as f64 > cell_target {
        depth += 1;
        if 2 * depth > MAX_ADDRESS_BITS as u32 {
            return Err(AddressError::TooDeep { bits: 2 * depth });
        }
    }
    let depth = depth as u8;

    let locate = |p: Point| -> u32 {
        let (mut x0, mut x1) = (origin.x, origin.x + side);
        let (mut y0, mut y1) = (origin.y, origin.y + side);
        let mut code = 0u32;
        for _ in 0..depth {
            let mx = (x0 + x1) * 0.5;
            let my = (y0 + y1) * 0.5;
            let bx = p.x >= mx;
            let by = p.y >= my;
            if bx { x0 = mx } else { x1 = mx }
            if by { y0 = my } else { y1 = my }
            code = (code << 2) | ((bx as u32) << 1) | by as u32;
        }
        code
    };

    let ncells = 1usize << (2 * depth as u32);
    let building_cell: Vec<CellId> = map
        .buildings()
        .iter()
        .map(|bd| CellId(locate(bd.centroid)))
        .collect();
    let mut cell_start = vec![0u32; ncells + 1];
    for c in &building_cell {
        cell_start[c.0 as usize + 1] += 1;
    }
    for i in 0..ncells {
        cell_start[i + 1] += cell_start[i];
    }
    let mut fill = cell_start.clone();
    let mut members = vec![BuildingId(0); map.len()];
    // Buildings are visited in id order, so each cell's members are id-sorted.
    for (i, c) in building_cell.iter().enumerate() {
        let slot = &mut fill[c.0 as usize];
        members[*slot as usize] = BuildingId(i as u32);
        *slot += 1;
    }

    let mut addresses = vec![GridAddress::EMPTY; map.len()];
    for c in 0..ncells {
        let list = &members[cell_start[c] as usize..cell_start[c + 1] as usize];
        let width = bits_for_population(list.len());
        let total = 2 * depth as u32 + width as u32;
        if total > MAX_ADDRESS_BITS as u32 {
            return Err(AddressError::TooDeep { bits: total });
        }
        let prefix = GridAddress::new(c as u64, 2 * depth);
        for (rank, b) in list.iter().enumerate() {
            addresses[b.index()] = prefix.concat(GridAddress::new(rank as u64, width));
        }
    }

    Ok(GridIndex {
        origin,
        side,
        depth,
        cell_start,
        members,
        building_cell,
        addresses,
    })
}

impl GridIndex {
    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn prefix_len(&self) -> u8 {
        2 * self.depth
    }

    pub fn cell_count(&self) -> usize {
        self.cell_start.len() - 1
    }

    pub fn cells_per_axis(&self) -> u32 {
        1 << self.depth
    }

    pub fn cell_side(&self) -> f64 {
        self.side / self.cells_per_axis() as f64
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn buildings_in(&self, c: CellId) -> &[BuildingId] {
        let i = c.0 as usize;
        &self.members[self.cell_start[i] as usize..self.cell_start[i + 1] as usize]
    }

    pub fn nonempty_cells(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cell_count() as u32)
            .map(CellId)
            .filter(|&c| !self.buildings_in(c).is_empty())
    }

    pub fn cell_of(&self, b: BuildingId) -> CellId {
        self.building_cell[b.index()]
    }

    pub fn cell_prefix(&self, c: CellId) -> GridAddress {
        GridAddress::new(c.0 as u64, self.prefix_len())
    }

    /// Column and row of a cell, both in `0..cells_per_axis`.
    pub fn cell_xy(&self, c: CellId) -> (u32, u32) {
        let (mut cx, mut cy) = (0u32, 0u32);
        for level in 0..self.depth as u32 {
            let pair = (c.0 >> (2 * (self.depth as u32 - 1 - level))) & 3;
            cx = (cx << 1) | (pair >> 1);
            cy = (cy << 1) | (pair & 1);
        }
        (cx, cy)
    }

    pub fn cell_center(&self, c: CellId) -> Point {
        let (cx, cy) = self.cell_xy(c);
        let s = self.cell_side();
        Point::new(
            self.origin.x + (cx as f64 + 0.5) * s,
            self.origin.y + (cy as f64 + 0.5) * s,
        )
    }

    pub fn address_of(&self, b: BuildingId) -> Result<GridAddress, AddressError> {
        self.addresses
            .get(b.index())
            .copied()
            .ok_or(AddressError::UnknownBuilding(b))
    }

    /// The leaf cell an address falls in, when it is at least a full cell prefix.
    pub fn cell_of_address(&self, a: &GridAddress) -> Option<CellId> {
        (a.len() >= self.prefix_len()).then(|| CellId(a.prefix(self.prefix_len()).bits() as u32))
    }

    pub fn building_of_address(&self, a: &GridAddress) -> Option<BuildingId> {
        let c = self.cell_of_address(a)?;
        self.buildings_in(c)
            .iter()
            .copied()
            .find(|&b| self.addresses[b.index()] == *a)
    }

    /// `prefix/suffix` rendering, e.g. `0011/10`.
    pub fn render(&self, a: &GridAddress) -> String {
        let p = self.prefix_len().min(a.len());
        let suffix = GridAddress::new(a.bits(), a.len() - p);
        format!("{}/{}", a.prefix(p), suffix)
    }
}
