//! Path selection on the building graph.
//!
//! * Safest path: grow a Prim tree from the source until the destination is
//!   attached. The tree path minimizes the largest edge, and so does every
//!   sub-path of it.
//! * `d^k` path: Dijkstra on edge costs `d^k`. For `k` above
//!   [`LIMIT_EXPONENT`] the sum is replaced by its large-`k` limit order:
//!   paths compare by their edge weights sorted in descending order,
//!   lexicographically.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BuildingGraph;
use crate::mapdata::BuildingId;

/// Exponents above this switch to the descending-weight comparison.
pub const LIMIT_EXPONENT: f64 = 32.0;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingPath {
    pub buildings: Vec<BuildingId>,
    /// Largest edge weight along the path, 0 for a single building.
    pub bottleneck: f64,
}

impl BuildingPath {
    pub fn source(&self) -> BuildingId {
        self.buildings[0]
    }

    pub fn destination(&self) -> BuildingId {
        *self.buildings.last().unwrap()
    }

    pub fn len(&self) -> usize {
        self.buildings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buildings.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (BuildingId, BuildingId)> + '_ {
        self.buildings.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Serialized as its exponent, or `"mst"` for the minimax limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "MetricRepr")]
pub enum PathMetric {
    /// Edge cost `d^k`, `k >= 1`.
    Power(f64),
    /// Safest (minimax) path; the `k -> infinity` limit, always on the MST.
    Minimax,
}

impl Default for PathMetric {
    fn default() -> Self {
        PathMetric::Power(10.0)
    }
}

impl fmt::Display for PathMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathMetric::Power(k) => write!(f, "{k}"),
            PathMetric::Minimax => f.write_str("mst"),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MetricRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<MetricRepr> for PathMetric {
    type Error = String;

    fn try_from(r: MetricRepr) -> Result<Self, String> {
        match r {
            MetricRepr::Number(k) => k.to_string().parse(),
            MetricRepr::Text(s) => s.parse(),
        }
    }
}

impl From<PathMetric> for String {
    fn from(m: PathMetric) -> String {
        m.to_string()
    }
}

impl FromStr for PathMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mst" | "inf" | "infinity" | "minimax" | "safest" => Ok(PathMetric::Minimax),
            other => {
                let k: f64 = other
                    .parse()
                    .map_err(|_| format!("invalid path exponent {s:?}"))?;
                if !(k >= 1.0) || !k.is_finite() {
                    return Err(format!("path exponent must be >= 1, got {s}"));
                }
                Ok(PathMetric::Power(k))
            }
        }
    }
}

/// Single-source path tree. Paths extracted from a tree are identical to the
/// ones the per-pair queries return.
#[derive(Debug, Clone)]
pub struct PathTree {
    source: BuildingId,
    parent: Vec<u32>,
    parent_weight: Vec<f64>,
}

impl PathTree {
    fn new(n: usize, source: BuildingId) -> Self {
        Self {
            source,
            parent: vec![NONE; n],
            parent_weight: vec![0.0; n],
        }
    }

    pub fn source(&self) -> BuildingId {
        self.source
    }

    pub fn reaches(&self, d: BuildingId) -> bool {
        d == self.source || self.parent[d.index()] != NONE
    }

    fn sequence(&self, d: u32) -> Vec<u32> {
        let mut seq = vec![d];
        let mut cur = d;
        while cur != self.source.0 {
            cur = self.parent[cur as usize];
            seq.push(cur);
        }
        seq.reverse();
        seq
    }

    pub fn path_to(&self, d: BuildingId) -> Option<BuildingPath> {
        if !self.reaches(d) {
            return None;
        }
        let seq = self.sequence(d.0);
        let bottleneck = seq[1..]
            .iter()
            .map(|&v| self.parent_weight[v as usize])
            .fold(0.0, f64::max);
        Some(BuildingPath {
            buildings: seq.into_iter().map(BuildingId).collect(),
            bottleneck,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct PrimItem {
    weight: f64,
    to: u32,
    from: u32,
}

impl PartialEq for PrimItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for PrimItem {}
impl PartialOrd for PrimItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PrimItem {
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .weight
            .total_cmp(&self.weight)
            .then(other.to.cmp(&self.to))
            .then(other.from.cmp(&self.from))
    }
}

fn prim_grow(g: &BuildingGraph, s: BuildingId, target: Option<BuildingId>) -> PathTree {
    let mut tree = PathTree::new(g.vertex_count(), s);
    let mut visited = vec![false; g.vertex_count()];
    visited[s.index()] = true;
    if target == Some(s) {
        return tree;
    }
    let mut heap: BinaryHeap<PrimItem> = g
        .neighbors(s)
        .iter()
        .map(|e| PrimItem {
            weight: e.weight,
            to: e.to.0,
            from: s.0,
        })
        .collect();
    while let Some(PrimItem { weight, to, from }) = heap.pop() {
        if visited[to as usize] {
            continue;
        }
        visited[to as usize] = true;
        tree.parent[to as usize] = from;
        tree.parent_weight[to as usize] = weight;
        if target == Some(BuildingId(to)) {
            break;
        }
        for e in g.neighbors(BuildingId(to)) {
            if !visited[e.to.index()] {
                heap.push(PrimItem {
                    weight: e.weight,
                    to: e.to.0,
                    from: to,
                });
            }
        }
    }
    tree
}

/// Safest (minimax) path from `s` to `d`, or `None` when they are not
/// connected.
pub fn safest_path(g: &BuildingGraph, s: BuildingId, d: BuildingId) -> Option<BuildingPath> {
    prim_grow(g, s, Some(d)).path_to(d)
}

trait Cost: Clone {
    fn cmp_cost(&self, other: &Self) -> Ordering;
}

impl Cost for f64 {
    fn cmp_cost(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }
}

/// Edge weights sorted in descending order. Comparing these
/// lexicographically, with a missing entry counting as smaller than any
/// weight, is the order `sum(d^k)` induces as `k` grows without bound.
#[derive(Debug, Clone, PartialEq)]
struct DescendingWeights(Vec<f64>);

impl DescendingWeights {
    fn with(&self, w: f64) -> Self {
        let mut v = self.0.clone();
        let pos = v.partition_point(|&x| x >= w);
        v.insert(pos, w);
        DescendingWeights(v)
    }
}

impl Cost for DescendingWeights {
    fn cmp_cost(&self, other: &Self) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

struct Item<C> {
    cost: C,
    v: u32,
}

impl<C: Cost> PartialEq for Item<C> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<C: Cost> Eq for Item<C> {}
impl<C: Cost> PartialOrd for Item<C> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<C: Cost> Ord for Item<C> {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.cmp_cost(&self.cost).then(other.v.cmp(&self.v))
    }
}

fn dijkstra<C: Cost>(
    g: &BuildingGraph,
    s: BuildingId,
    target: Option<BuildingId>,
    zero: C,
    extend: impl Fn(&C, f64) -> C,
) -> PathTree {
    let n = g.vertex_count();
    let mut tree = PathTree::new(n, s);
    let mut best: Vec<Option<C>> = vec![None; n];
    let mut settled = vec![false; n];
    best[s.index()] = Some(zero.clone());
    let mut heap = BinaryHeap::new();
    heap.push(Item { cost: zero, v: s.0 });
    while let Some(Item { cost, v }) = heap.pop() {
        if settled[v as usize] {
            continue;
        }
        settled[v as usize] = true;
        if target == Some(BuildingId(v)) {
            break;
        }
        for e in g.neighbors(BuildingId(v)) {
            let q = e.to.index();
            if settled[q] {
                continue;
            }
            let nc = extend(&cost, e.weight);
            let replace = match &best[q] {
                None => true,
                Some(cur) => match nc.cmp_cost(cur) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    // Equal cost: keep the lexicographically smaller id sequence.
                    Ordering::Equal => tree.sequence(v) < tree.sequence(tree.parent[q]),
                },
            };
            if replace {
                let improved = best[q].as_ref().is_none_or(|c| nc.cmp_cost(c).is_lt());
                tree.parent[q] = v;
                tree.parent_weight[q] = e.weight;
                if improved {
                    best[q] = Some(nc.clone());
                    heap.push(Item { cost: nc, v: q as u32 });
                }
            }
        }
    }
    tree
}

fn power_tree(g: &BuildingGraph, s: BuildingId, target: Option<BuildingId>, k: f64) -> PathTree {
    assert!(k >= 1.0, "path exponent must be >= 1");
    if k > LIMIT_EXPONENT {
        return dijkstra(g, s, target, DescendingWeights(Vec::new()), |c, w| c.with(w));
    }
    // Normalizing by the largest weight keeps d^k within f64 range.
    let scale = g.max_weight().max(f64::MIN_POSITIVE);
    dijkstra(g, s, target, 0.0f64, |c, w| c + (w / scale).powf(k))
}

/// Minimum total `d^k` path from `s` to `d`.
pub fn k_exp_path(g: &BuildingGraph, s: BuildingId, d: BuildingId, k: f64) -> Option<BuildingPath> {
    power_tree(g, s, Some(d), k).path_to(d)
}

/// Full single-source tree under `metric`.
pub fn path_tree(g: &BuildingGraph, s: BuildingId, metric: PathMetric) -> PathTree {
    match metric {
        PathMetric::Power(k) => power_tree(g, s, None, k),
        PathMetric::Minimax => prim_grow(g, s, None),
    }
}

impl PathMetric {
    pub fn path(&self, g: &BuildingGraph, s: BuildingId, d: BuildingId) -> Option<BuildingPath> {
        match *self {
            PathMetric::Power(k) => k_exp_path(g, s, d, k),
            PathMetric::Minimax => safest_path(g, s, d),
        }
    }
}
