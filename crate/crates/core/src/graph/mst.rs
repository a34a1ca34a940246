use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::BuildingGraph;
use crate::mapdata::BuildingId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MstEdge {
    pub u: BuildingId,
    pub v: BuildingId,
    pub weight: f64,
}

struct Cand(f64, u32, u32);

impl PartialEq for Cand {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Cand {}
impl PartialOrd for Cand {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Cand {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0)
            .then(o.1.cmp(&self.1))
            .then(o.2.cmp(&self.2))
    }
}

/// Minimum spanning forest by Prim's algorithm, restarted in every component.
/// Edges are returned with `u < v`, sorted by `(u, v)`.
pub fn mst(g: &BuildingGraph) -> Vec<MstEdge> {
    let n = g.vertex_count();
    let mut in_tree = vec![false; n];
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    let mut heap = BinaryHeap::new();
    for root in 0..n {
        if in_tree[root] {
            continue;
        }
        in_tree[root] = true;
        for e in g.neighbors(BuildingId(root as u32)) {
            heap.push(Cand(e.weight, e.to.0, root as u32));
        }
        while let Some(Cand(w, to, from)) = heap.pop() {
            if in_tree[to as usize] {
                continue;
            }
            in_tree[to as usize] = true;
            out.push(MstEdge {
                u: BuildingId(from.min(to)),
                v: BuildingId(from.max(to)),
                weight: w,
            });
            for e in g.neighbors(BuildingId(to)) {
                if !in_tree[e.to.index()] {
                    heap.push(Cand(e.weight, e.to.0, to));
                }
            }
        }
    }
    out.sort_by_key(|e| (e.u, e.v));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_input_is_returned() {
        let edges = vec![(0, 1, 3.0), (1, 2, 1.0), (1, 3, 2.0), (3, 4, 9.0)];
        let g = BuildingGraph::from_edges(5, 100.0, edges.clone());
        let got: Vec<(u32, u32, f64)> = mst(&g).iter().map(|e| (e.u.0, e.v.0, e.weight)).collect();
        assert_eq!(got, edges);
    }

    #[test]
    fn forest_over_components() {
        let g = BuildingGraph::from_edges(
            5,
            100.0,
            vec![(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0), (3, 4, 1.5)],
        );
        let got: Vec<(u32, u32)> = mst(&g).iter().map(|e| (e.u.0, e.v.0)).collect();
        assert_eq!(got, vec![(0, 1), (1, 2), (3, 4)]);
    }
}
