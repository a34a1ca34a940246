//! Route-server pipeline: cell-pair path precomputation, per-building
//! routing tables, prefix compression and longest-prefix-match lookup.

mod format;
mod ortc;

use std::collections::HashMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::addressing::{CellId, GridAddress, GridIndex};
use crate::corridor::waypoint_positions;
use crate::graph::{path_tree, BuildingGraph, PathMetric};
use crate::mapdata::{BuildingId, BuildingMap, Point};
use crate::rng::{stream, Purpose};

pub use self::format::{read_table, write_table, write_tables_csv, TableFormatError, TABLE_MAGIC, TABLE_VERSION};
pub use self::ortc::{compress_entries, lookup_domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RoutingEntry {
    pub prefix: GridAddress,
    /// `None` is an explicit unreachable route; only compressed tables carry
    /// them, to carve unreachable cells out of a covering aggregate.
    pub next_waypoint: Option<BuildingId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub owner: BuildingId,
    entries: Vec<RoutingEntry>,
}

fn prefix_key(a: &GridAddress) -> (u64, u8) {
    let aligned = if a.is_empty() { 0 } else { a.bits() << (64 - a.len() as u32) };
    (aligned, a.len())
}

impl RoutingTable {
    /// Entries are sorted into prefix order; a later duplicate prefix
    /// replaces an earlier one.
    pub fn new(owner: BuildingId, entries: Vec<RoutingEntry>) -> Self {
        let mut by_prefix: HashMap<GridAddress, RoutingEntry> = HashMap::with_capacity(entries.len());
        for e in entries {
            by_prefix.insert(e.prefix, e);
        }
        let mut entries: Vec<RoutingEntry> = by_prefix.into_values().collect();
        entries.sort_by_key(|e| prefix_key(&e.prefix));
        Self { owner, entries }
    }

    pub fn entries(&self) -> &[RoutingEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The zero-length entry, if present.
    pub fn default_entry(&self) -> Option<&RoutingEntry> {
        self.entries.first().filter(|e| e.prefix.is_empty())
    }

    /// Longest-prefix match. `None` means unreachable: either no entry
    /// matches or the best match is an explicit unreachable route.
    pub fn lookup(&self, dest: &GridAddress) -> Option<BuildingId> {
        let mut best: Option<&RoutingEntry> = None;
        for e in &self.entries {
            if e.prefix.is_prefix_of(dest) && best.is_none_or(|b| e.prefix.len() > b.prefix.len()) {
                best = Some(e);
            }
        }
        best.and_then(|e| e.next_waypoint)
    }
}

/// ORTC compression over the addresses `owner` can be asked about: every
/// non-empty cell prefix outside its own cell and every address in its cell.
/// The result answers identically on that domain and on every building
/// address.
pub fn compress_table(t: &RoutingTable, idx: &GridIndex) -> RoutingTable {
    let domain = lookup_domain(idx, t.owner);
    RoutingTable::new(t.owner, compress_entries(t, &domain))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableParams {
    pub metric: PathMetric,
    pub conduit_width: f64,
    pub seed: u64,
}

impl Default for TableParams {
    fn default() -> Self {
        Self {
            metric: PathMetric::default(),
            conduit_width: crate::corridor::DEFAULT_CONDUIT_WIDTH_M,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecomputeStats {
    pub buildings: usize,
    pub nonempty_cells: usize,
    /// Ordered representative pairs whose path was extracted.
    pub cell_pair_paths: usize,
    pub unreachable_cell_pairs: usize,
    /// Paths recomputed from a waypoint that lay in its owner's cell.
    pub pathology_paths: usize,
    /// Per-building paths to cell-mates.
    pub in_cell_paths: usize,
}

impl PrecomputeStats {
    pub fn path_computations(&self) -> usize {
        self.cell_pair_paths + self.pathology_paths + self.in_cell_paths
    }
}

/// One building chosen per non-empty cell, seeded per cell.
pub fn cell_representatives(idx: &GridIndex, seed: u64) -> Vec<(CellId, BuildingId)> {
    idx.nonempty_cells()
        .map(|c| {
            let members = idx.buildings_in(c);
            let mut rng = stream(seed, Purpose::CellRepresentative, c.0 as u64);
            (c, members[rng.random_range(0..members.len())])
        })
        .collect()
}

const NONE: u32 = u32::MAX;

/// Dense `building x destination cell` next-waypoint matrix over the
/// non-empty cells.
struct Builder<'a> {
    map: &'a BuildingMap,
    centers: Vec<Point>,
    cells: usize,
    next: Vec<u32>,
}

impl Builder<'_> {
    fn get(&self, b: BuildingId, dest: usize) -> Option<BuildingId> {
        let v = self.next[b.index() * self.cells + dest];
        (v != NONE).then_some(BuildingId(v))
    }

    fn set(&mut self, b: BuildingId, dest: usize, wp: Option<BuildingId>) {
        self.next[b.index() * self.cells + dest] = wp.map_or(NONE, |w| w.0);
    }

    /// Whether `a` is strictly preferred over `b` for destination `dest`.
    fn closer(&self, a: BuildingId, b: BuildingId, dest: usize) -> bool {
        let center = self.centers[dest];
        let (da, db) = (
            self.map.centroid(a).dist_sq(center),
            self.map.centroid(b).dist_sq(center),
        );
        da < db || (da == db && a < b)
    }

    fn offer(&mut self, b: BuildingId, dest: usize, wp: BuildingId) {
        let keep = match self.get(b, dest) {
            Some(cur) => self.closer(wp, cur, dest),
            None => true,
        };
        if keep {
            self.set(b, dest, Some(wp));
        }
    }
}

/// Records `(building, next waypoint)` for every non-final building of a path.
fn route_records(path: &[BuildingId], map: &BuildingMap, width: f64) -> Vec<(BuildingId, BuildingId)> {
    let wps = waypoint_positions(path, map, width);
    let mut out = Vec::with_capacity(path.len().saturating_sub(1));
    let mut w = 1;
    for (p, &b) in path.iter().enumerate().take(path.len() - 1) {
        while wps[w] <= p {
            w += 1;
        }
        out.push((b, path[wps[w]]));
    }
    out
}

/// Builds the uncompressed table of every building.
pub fn precompute_tables(
    g: &BuildingGraph,
    map: &BuildingMap,
    idx: &GridIndex,
    params: &TableParams,
) -> (Vec<RoutingTable>, PrecomputeStats) {
    assert_eq!(g.vertex_count(), map.len(), "graph and map disagree");
    let width = params.conduit_width;
    let reps = cell_representatives(idx, params.seed);
    let mut stats = PrecomputeStats {
        buildings: map.len(),
        nonempty_cells: reps.len(),
        ..Default::default()
    };

    let cells = reps.len();
    let mut ordinal = vec![NONE; idx.cell_count()];
    for (o, &(c, _)) in reps.iter().enumerate() {
        ordinal[c.0 as usize] = o as u32;
    }
    let cell_ord = |b: BuildingId| ordinal[idx.cell_of(b).0 as usize] as usize;

    // Cell-pair paths, one tree per source representative.
    let per_source: Vec<(Vec<(BuildingId, u32, BuildingId)>, usize, usize)> = reps
        .par_iter()
        .enumerate()
        .map(|(oi, &(_, ri))| {
            let tree = path_tree(g, ri, params.metric);
            let mut records = Vec::new();
            let (mut paths, mut unreachable) = (0, 0);
            for (oj, &(_, rj)) in reps.iter().enumerate() {
                if oj == oi {
                    continue;
                }
                let Some(path) = tree.path_to(rj) else {
                    unreachable += 1;
                    continue;
                };
                paths += 1;
                for (b, wp) in route_records(&path.buildings, map, width) {
                    if cell_ord(b) != oj {
                        records.push((b, oj as u32, wp));
                    }
                }
            }
            (records, paths, unreachable)
        })
        .collect();

    let mut builder = Builder {
        map,
        centers: reps.iter().map(|&(c, _)| idx.cell_center(c)).collect(),
        cells,
        next: vec![NONE; map.len() * cells],
    };
    for (records, paths, unreachable) in per_source {
        stats.cell_pair_paths += paths;
        stats.unreachable_cell_pairs += unreachable;
        for (b, oj, wp) in records {
            builder.offer(b, oj as usize, wp);
        }
    }

    // Fill-in from cell-mates.
    for &(c, _) in &reps {
        let members = idx.buildings_in(c);
        for dest in 0..cells {
            let mut best: Option<BuildingId> = None;
            for &m in members {
                if let Some(wp) = builder.get(m, dest) {
                    if best.is_none_or(|cur| builder.closer(wp, cur, dest)) {
                        best = Some(wp);
                    }
                }
            }
            if best.is_some() {
                for &m in members {
                    if builder.get(m, dest).is_none() {
                        builder.set(m, dest, best);
                    }
                }
            }
        }
    }

    // A waypoint inside the owner's cell must have a waypoint of its own that
    // leads out of the cell; where it does not, recompute from it.
    let mut fixed = vec![false; map.len() * cells];
    for b in map.ids() {
        let cb = cell_ord(b);
        for dest in 0..cells {
            let mut w = match builder.get(b, dest) {
                Some(w) if cell_ord(w) == cb => w,
                _ => continue,
            };
            loop {
                match builder.get(w, dest) {
                    Some(x) if cell_ord(x) != cb => break,
                    _ if fixed[w.index() * cells + dest] => break,
                    _ => {}
                }
                fixed[w.index() * cells + dest] = true;
                stats.pathology_paths += 1;
                let Some(path) = params.metric.path(g, w, reps[dest].1) else {
                    builder.set(w, dest, None);
                    break;
                };
                let wps = waypoint_positions(&path.buildings, map, width);
                let nw = path.buildings[wps[1]];
                builder.set(w, dest, Some(nw));
                if cell_ord(nw) != cb {
                    break;
                }
                w = nw;
            }
        }
    }

    // Explicit entries for cell-mates.
    let in_cell: Vec<(Vec<RoutingEntry>, usize)> = map
        .ids()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&b| {
            let mut entries = Vec::new();
            let mut paths = 0;
            for &x in idx.buildings_in(idx.cell_of(b)) {
                if x == b {
                    continue;
                }
                paths += 1;
                if let Some(path) = params.metric.path(g, b, x) {
                    let wps = waypoint_positions(&path.buildings, map, width);
                    entries.push(RoutingEntry {
                        prefix: idx.address_of(x).expect("cell member"),
                        next_waypoint: Some(path.buildings[wps[1]]),
                    });
                }
            }
            (entries, paths)
        })
        .collect();

    let tables = in_cell
        .into_iter()
        .enumerate()
        .map(|(i, (mut entries, paths))| {
            stats.in_cell_paths += paths;
            let b = BuildingId(i as u32);
            entries.extend(reps.iter().enumerate().filter_map(|(dest, &(c, _))| {
                builder.get(b, dest).map(|wp| RoutingEntry {
                    prefix: idx.cell_prefix(c),
                    next_waypoint: Some(wp),
                })
            }));
            RoutingTable::new(b, entries)
        })
        .collect();
    (tables, stats)
}

/// Follows tables hop by hop from `src` toward `dest`, returning the visited
/// waypoints (starting with `src`, ending with `dest`). `None` when a lookup
/// comes back unreachable or the walk exceeds one step per building.
pub fn follow_tables(
    tables: &[RoutingTable],
    idx: &GridIndex,
    src: BuildingId,
    dest: BuildingId,
) -> Option<Vec<BuildingId>> {
    let addr = idx.address_of(dest).ok()?;
    let mut walk = vec![src];
    let mut cur = src;
    while cur != dest {
        if walk.len() > tables.len() {
            return None;
        }
        cur = tables[cur.index()].lookup(&addr)?;
        walk.push(cur);
    }
    Some(walk)
}
