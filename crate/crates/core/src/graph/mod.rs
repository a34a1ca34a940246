//! Building graph: vertices are buildings, edges join buildings whose
//! footprints are within radio range, weighted by closest footprint distance.

mod feasibility;
mod mst;
mod paths;

use std::collections::HashMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::mapdata::{min_distance, BuildingId, BuildingMap};

pub use self::feasibility::{feasibility_sweep, write_feasibility_csv, FeasibilityRow};
pub use self::mst::{mst, MstEdge};
pub use self::paths::{k_exp_path, path_tree, safest_path, BuildingPath, PathMetric, PathTree};

pub const DEFAULT_RANGE_M: f64 = 100.0;
/// Weight substituted for touching or overlapping footprints.
pub const TOUCH_EPSILON_M: f64 = 0.01;
/// Per-rank offset separating equal distances.
pub const TIE_EPSILON_M: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub to: BuildingId,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingGraph {
    adj: Vec<Vec<Edge>>,
    range: f64,
    max_weight: f64,
}

impl BuildingGraph {
    /// Builds a graph from undirected `(u, v, distance)` triples. Touching
    /// footprints get [`TOUCH_EPSILON_M`]; equal distances are separated by
    /// `TIE_EPSILON_M * rank` in `(u, v)` order so every weight is distinct.
    pub fn from_edges(n: usize, range: f64, mut edges: Vec<(u32, u32, f64)>) -> Self {
        for e in &mut edges {
            if e.0 > e.1 {
                std::mem::swap(&mut e.0, &mut e.1);
            }
            if e.2 <= 0.0 {
                e.2 = TOUCH_EPSILON_M;
            }
        }
        edges.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
        edges.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);
        let mut adj = vec![Vec::new(); n];
        let mut max_weight: f64 = 0.0;
        let mut i = 0;
        while i < edges.len() {
            let d = edges[i].2;
            let mut j = i;
            while j < edges.len() && edges[j].2 == d {
                let (u, v, _) = edges[j];
                let w = d + TIE_EPSILON_M * (j - i) as f64;
                max_weight = max_weight.max(w);
                adj[u as usize].push(Edge {
                    to: BuildingId(v),
                    weight: w,
                });
                adj[v as usize].push(Edge {
                    to: BuildingId(u),
                    weight: w,
                });
                j += 1;
            }
            i = j;
        }
        for list in &mut adj {
            list.sort_by_key(|e| e.to);
        }
        Self {
            adj,
            range,
            max_weight,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn max_weight(&self) -> f64 {
        self.max_weight
    }

    pub fn neighbors(&self, v: BuildingId) -> &[Edge] {
        &self.adj[v.index()]
    }

    pub fn weight(&self, u: BuildingId, v: BuildingId) -> Option<f64> {
        let list = &self.adj[u.index()];
        list.binary_search_by_key(&v, |e| e.to)
            .ok()
            .map(|i| list[i].weight)
    }

    pub fn is_neighbor(&self, u: BuildingId, v: BuildingId) -> bool {
        self.weight(u, v).is_some()
    }

    /// Undirected edges with `u < v`, ordered by `(u, v)`.
    pub fn edges(&self) -> impl Iterator<Item = (BuildingId, BuildingId, f64)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            list.iter()
                .filter(move |e| e.to.index() > u)
                .map(move |e| (BuildingId(u as u32), e.to, e.weight))
        })
    }

    /// Edge-list CSV `u,v,d_m`.
    pub fn write_edge_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "u,v,d_m")?;
        for (u, v, w) in self.edges() {
            writeln!(out, "{u},{v},{w}")?;
        }
        Ok(())
    }
}

/// All building pairs whose footprints are within `range`, as `(u, v, d)`
/// with `u < v`. Candidates come from a uniform bucket grid with cell side
/// `range`, so the work is proportional to the number of nearby pairs.
pub fn pairs_within(map: &BuildingMap, range: f64) -> Vec<(u32, u32, f64)> {
    assert!(range > 0.0, "range must be positive");
    let cell = range;
    let key = |x: f64, y: f64| ((x / cell).floor() as i64, (y / cell).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for b in map.buildings() {
        let (x0, y0) = key(b.bounds.min_x, b.bounds.min_y);
        let (x1, y1) = key(b.bounds.max_x, b.bounds.max_y);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                buckets.entry((cx, cy)).or_default().push(b.id.0);
            }
        }
    }
    let mut seen = vec![u32::MAX; map.len()];
    let mut out = Vec::new();
    for a in map.buildings() {
        let (x0, y0) = key(a.bounds.min_x - range, a.bounds.min_y - range);
        let (x1, y1) = key(a.bounds.max_x + range, a.bounds.max_y + range);
        for cx in x0..=x1 {
            for cy in y0..=y1 {
                let Some(list) = buckets.get(&(cx, cy)) else {
                    continue;
                };
                for &bid in list {
                    if bid <= a.id.0 || seen[bid as usize] == a.id.0 {
                        continue;
                    }
                    seen[bid as usize] = a.id.0;
                    let b = map.building(BuildingId(bid));
                    if a.bounds.gap(&b.bounds) > range {
                        continue;
                    }
                    let d = min_distance(a, b);
                    if d <= range {
                        out.push((a.id.0, bid, d));
                    }
                }
            }
        }
    }
    out.sort_by_key(|x| (x.0, x.1));
    out
}

pub fn build_graph(map: &BuildingMap, range: f64) -> BuildingGraph {
    BuildingGraph::from_edges(map.len(), range, pairs_within(map, range))
}

/// Connected components as a per-vertex component label, labels dense from 0
/// in order of the smallest vertex.
pub fn components(g: &BuildingGraph) -> (usize, Vec<u32>) {
    let n = g.vertex_count();
    let mut label = vec![u32::MAX; n];
    let mut count = 0u32;
    let mut stack = Vec::new();
    for s in 0..n {
        if label[s] != u32::MAX {
            continue;
        }
        label[s] = count;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for e in &g.adj[u] {
                if label[e.to.index()] == u32::MAX {
                    label[e.to.index()] = count;
                    stack.push(e.to.index());
                }
            }
        }
        count += 1;
    }
    (count as usize, label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapdata::Point;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Point> {
        vec![
            Point::new(x0, y0),
            Point::new(x0 + s, y0),
            Point::new(x0 + s, y0 + s),
            Point::new(x0, y0 + s),
        ]
    }

    #[test]
    fn single_building_has_no_edges() {
        let map = BuildingMap::from_rings(vec![square(0.0, 0.0, 10.0)]).unwrap();
        assert_eq!(build_graph(&map, 100.0).edge_count(), 0);
    }

    #[test]
    fn two_buildings_fifty_apart() {
        let map =
            BuildingMap::from_rings(vec![square(0.0, 0.0, 10.0), square(60.0, 0.0, 10.0)]).unwrap();
        let g = build_graph(&map, 100.0);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.weight(BuildingId(0), BuildingId(1)), Some(50.0));
        assert_eq!(g.weight(BuildingId(1), BuildingId(0)), Some(50.0));
        assert_eq!(build_graph(&map, 49.0).edge_count(), 0);
    }

    #[test]
    fn touching_and_tied_weights() {
        // Three squares in a row touching, plus a fourth 5 m from the third.
        let map = BuildingMap::from_rings(vec![
            square(0.0, 0.0, 10.0),
            square(10.0, 0.0, 10.0),
            square(20.0, 0.0, 10.0),
            square(35.0, 0.0, 10.0),
        ])
        .unwrap();
        let g = build_graph(&map, 6.0);
        let w01 = g.weight(BuildingId(0), BuildingId(1)).unwrap();
        let w12 = g.weight(BuildingId(1), BuildingId(2)).unwrap();
        assert_eq!(w01, TOUCH_EPSILON_M);
        assert_eq!(w12, TOUCH_EPSILON_M + TIE_EPSILON_M);
        assert_eq!(g.weight(BuildingId(2), BuildingId(3)), Some(5.0));
        assert!(g.weight(BuildingId(0), BuildingId(2)).is_none());
    }

    #[test]
    fn components_of_two_clusters() {
        let map = BuildingMap::from_rings(vec![
            square(0.0, 0.0, 10.0),
            square(30.0, 0.0, 10.0),
            square(500.0, 0.0, 10.0),
        ])
        .unwrap();
        let (n, labels) = components(&build_graph(&map, 100.0));
        assert_eq!(n, 2);
        assert_eq!(labels, vec![0, 0, 1]);
    }
}
