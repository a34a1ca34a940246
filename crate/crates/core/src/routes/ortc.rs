//! Optimal routing table construction over a binary prefix trie.
//!
//! The trie holds only the addresses a table can be queried with. Nodes off
//! that domain do not care which next hop they see, so a missing sibling in
//! the normalized trie contributes the universal set. A query address that
//! is a proper prefix of other queries pins its node to the value it must
//! answer.

use super::{RoutingEntry, RoutingTable};
use crate::addressing::{GridAddress, GridIndex};
use crate::mapdata::BuildingId;

type Hop = Option<BuildingId>;

/// Query addresses of `owner`'s table: non-empty cell prefixes other than its
/// own cell, plus the addresses of every building in its cell, itself
/// included.
pub fn lookup_domain(idx: &GridIndex, owner: BuildingId) -> Vec<GridAddress> {
    let own = idx.cell_of(owner);
    let mut out: Vec<GridAddress> = idx
        .nonempty_cells()
        .filter(|&c| c != own)
        .map(|c| idx.cell_prefix(c))
        .collect();
    out.extend(
        idx.buildings_in(own)
            .iter()
            .map(|&b| idx.address_of(b).expect("cell member")),
    );
    out
}

#[derive(Default)]
struct Node {
    child: [Option<usize>; 2],
    /// Required answer when this node is itself a query address.
    query: Option<Hop>,
    /// `None` is the universal set; otherwise sorted, distinct hops.
    set: Option<Vec<Hop>>,
}

fn merge(a: Option<Vec<Hop>>, b: Option<Vec<Hop>>) -> Option<Vec<Hop>> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => {
            let both: Vec<Hop> = a.iter().filter(|h| b.binary_search(h).is_ok()).copied().collect();
            if !both.is_empty() {
                return Some(both);
            }
            let mut all = a;
            all.extend(b);
            all.sort();
            all.dedup();
            Some(all)
        }
    }
}

fn pick(set: &[Hop]) -> Hop {
    set.iter().copied().find(|h| h.is_some()).unwrap_or(None)
}

/// Minimal entry list answering like `t` on every address in `domain`.
pub fn compress_entries(t: &RoutingTable, domain: &[GridAddress]) -> Vec<RoutingEntry> {
    let mut nodes = vec![Node::default()];
    for q in domain {
        let mut n = 0;
        for i in 0..q.len() {
            let b = q.bit(i) as usize;
            n = match nodes[n].child[b] {
                Some(c) => c,
                None => {
                    nodes.push(Node::default());
                    let c = nodes.len() - 1;
                    nodes[n].child[b] = Some(c);
                    c
                }
            };
        }
        nodes[n].query = Some(t.lookup(q));
    }

    // Children are always created after their parent, so a reverse sweep is
    // a post-order.
    for n in (0..nodes.len()).rev() {
        nodes[n].set = match nodes[n].query {
            Some(h) => Some(vec![h]),
            None => {
                let [a, b] = nodes[n].child;
                let sa = a.and_then(|c| nodes[c].set.clone());
                let sb = b.and_then(|c| nodes[c].set.clone());
                merge(sa, sb)
            }
        };
    }

    let mut out = Vec::new();
    let mut stack: Vec<(usize, GridAddress, Hop)> = vec![(0, GridAddress::EMPTY, None)];
    while let Some((n, prefix, inherited)) = stack.pop() {
        let here = match &nodes[n].set {
            None => inherited,
            Some(set) if set.binary_search(&inherited).is_ok() => inherited,
            Some(set) => {
                let h = pick(set);
                out.push(RoutingEntry {
                    prefix,
                    next_waypoint: h,
                });
                h
            }
        };
        for bit in [1, 0] {
            if let Some(c) = nodes[n].child[bit] {
                stack.push((c, prefix.push(bit == 1), here));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use std::collections::HashMap;

    fn table(pairs: &[(&str, u32)]) -> RoutingTable {
        RoutingTable::new(
            BuildingId(0),
            pairs
                .iter()
                .map(|&(p, w)| RoutingEntry {
                    prefix: p.parse().unwrap(),
                    next_waypoint: Some(BuildingId(w)),
                })
                .collect(),
        )
    }

    fn all(len: u8) -> Vec<GridAddress> {
        (0..1u64 << len).map(|v| GridAddress::new(v, len)).collect()
    }

    fn check_equivalent(t: &RoutingTable, c: &[RoutingEntry], domain: &[GridAddress]) {
        let ct = RoutingTable::new(t.owner, c.to_vec());
        for q in domain {
            assert_eq!(ct.lookup(q), t.lookup(q), "query {q}");
        }
    }

    #[test]
    fn uniform_table_collapses_to_default() {
        let t = table(&[("00", 7), ("01", 7), ("10", 7), ("11", 7)]);
        let c = compress_entries(&t, &all(2));
        assert_eq!(c.len(), 1);
        assert!(c[0].prefix.is_empty());
        assert_eq!(c[0].next_waypoint, Some(BuildingId(7)));
    }

    #[test]
    fn aggregate_plus_outlier() {
        // Depth-2 grid, 16 cells: the 0000..0011 quadrant plus everything
        // else share waypoint 1 except cell 0110.
        let mut pairs: Vec<(String, u32)> = all(4).iter().map(|a| (a.to_string(), 1)).collect();
        pairs.iter_mut().find(|p| p.0 == "0110").unwrap().1 = 2;
        let refs: Vec<(&str, u32)> = pairs.iter().map(|(s, w)| (s.as_str(), *w)).collect();
        let t = table(&refs);
        let c = compress_entries(&t, &all(4));
        assert_eq!(c.len(), 2);
        check_equivalent(&t, &c, &all(4));
    }

    #[test]
    fn four_siblings_and_outlier_in_other_quadrant() {
        let t = table(&[("0000", 1), ("0001", 1), ("0010", 1), ("0011", 1), ("0100", 2)]);
        let domain: Vec<GridAddress> = ["0000", "0001", "0010", "0011", "0100"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
        let c = compress_entries(&t, &domain);
        assert_eq!(c.len(), 2);
        check_equivalent(&t, &c, &domain);
    }

    #[test]
    fn unreachable_cells_stay_unreachable() {
        let t = table(&[("00", 1), ("01", 1), ("10", 1)]);
        let c = compress_entries(&t, &all(2));
        check_equivalent(&t, &c, &all(2));
        assert_eq!(c.len(), 2);
        assert!(c.iter().any(|e| e.next_waypoint.is_none()));
    }

    #[test]
    fn internal_query_nodes_are_pinned() {
        // "01" is a query and also a prefix of the queries "0100", "0101".
        let t = table(&[("01", 3), ("0100", 5), ("0101", 5), ("1", 5)]);
        let domain: Vec<GridAddress> = ["01", "0100", "0101", "1"].iter().map(|s| s.parse().unwrap()).collect();
        let c = compress_entries(&t, &domain);
        check_equivalent(&t, &c, &domain);
        // Default 5, "01" -> 3, and "010" -> 5 underneath it.
        assert_eq!(c.len(), 3);
    }

    /// Exhaustive minimum over every table whose prefixes are trie nodes of
    /// depth <= `depth`, by recursion over (node, inherited hop).
    fn brute_min(
        t: &RoutingTable,
        prefix: GridAddress,
        depth: u8,
        inherited: Hop,
        hops: &[Hop],
        memo: &mut HashMap<(GridAddress, Hop), Option<usize>>,
    ) -> Option<usize> {
        if let Some(&v) = memo.get(&(prefix, inherited)) {
            return v;
        }
        let mut best: Option<usize> = None;
        for own in std::iter::once(None).chain(hops.iter().map(|&h| Some(h))) {
            let here = own.unwrap_or(inherited);
            let cost = own.is_some() as usize;
            let rest = if prefix.len() == depth {
                (t.lookup(&prefix) == here).then_some(0)
            } else {
                let a = brute_min(t, prefix.push(false), depth, here, hops, memo);
                let b = brute_min(t, prefix.push(true), depth, here, hops, memo);
                a.zip(b).map(|(a, b)| a + b)
            };
            if let Some(r) = rest {
                best = Some(best.map_or(cost + r, |b: usize| b.min(cost + r)));
            }
        }
        memo.insert((prefix, inherited), best);
        best
    }

    #[test]
    fn optimal_on_small_tries() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for trial in 0..300 {
            let depth = rng.random_range(1..=4u8);
            let hop_count = rng.random_range(1..=3u32);
            let entries: Vec<RoutingEntry> = (0..rng.random_range(0..10))
                .map(|_| {
                    let len = rng.random_range(0..=depth);
                    RoutingEntry {
                        prefix: GridAddress::new(rng.random(), len),
                        next_waypoint: Some(BuildingId(rng.random_range(0..hop_count))),
                    }
                })
                .collect();
            let t = RoutingTable::new(BuildingId(0), entries);
            let domain = all(depth);
            let c = compress_entries(&t, &domain);
            check_equivalent(&t, &c, &domain);
            let hops: Vec<Hop> = std::iter::once(None)
                .chain((0..hop_count).map(|h| Some(BuildingId(h))))
                .collect();
            let min = brute_min(&t, GridAddress::EMPTY, depth, None, &hops, &mut HashMap::new()).unwrap();
            assert_eq!(c.len(), min, "trial {trial}: {t:?}");
            assert!(c.len() <= t.len().max(1) || t.is_empty());
        }
    }
}
