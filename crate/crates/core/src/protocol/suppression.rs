//! Delay timers for inter-building and in-building suppression.

use serde::{Deserialize, Serialize};

use crate::graph::BuildingGraph;
use crate::mapdata::{BuildingId, BuildingMap};

/// How heard neighbor buildings contribute to the in-building rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankRule {
    /// `2^i` for every heard neighbor, minus one per heard neighbor farther
    /// from the waypoint than the own building.
    #[default]
    Literal,
    /// `2^i` only for heard neighbors closer to the waypoint than the own
    /// building.
    CloserOnly,
}

fn dist(map: &BuildingMap, a: BuildingId, b: BuildingId) -> f64 {
    map.centroid(a).dist(map.centroid(b))
}

/// `rank * unit_ms` where `own` is ranked (from 1) among `sender`'s
/// neighbors by centroid distance to `next_wp`, ties by id. `None` (refuse)
/// when `own` is not a neighbor of `sender` or is farther from the waypoint
/// than `sender`.
pub fn inter_building_delay(
    g: &BuildingGraph,
    map: &BuildingMap,
    sender: BuildingId,
    own: BuildingId,
    next_wp: BuildingId,
    unit_ms: f64,
) -> Option<f64> {
    if !g.is_neighbor(sender, own) {
        return None;
    }
    let d_own = dist(map, own, next_wp);
    if d_own > dist(map, sender, next_wp) {
        return None;
    }
    let ahead = g
        .neighbors(sender)
        .iter()
        .filter(|e| {
            let d = dist(map, e.to, next_wp);
            d < d_own || (d == d_own && e.to < own)
        })
        .count();
    Some((ahead + 1) as f64 * unit_ms)
}

/// Neighbors of `own` in decreasing distance from `next_wp` (ties by
/// decreasing id), so the best-placed building is last.
pub fn sorted_neighbors(g: &BuildingGraph, map: &BuildingMap, own: BuildingId, next_wp: BuildingId) -> Vec<(BuildingId, f64)> {
    let mut nb: Vec<(BuildingId, f64)> = g
        .neighbors(own)
        .iter()
        .map(|e| (e.to, dist(map, e.to, next_wp)))
        .collect();
    nb.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
    nb
}

/// Rank `R` of a device from the neighbor list `nb` (decreasing distance
/// from the waypoint), the subset it has heard, and the own building's
/// distance to the waypoint.
pub fn in_building_rank(
    nb: &[(BuildingId, f64)],
    heard: impl Fn(BuildingId) -> bool,
    own_dist: f64,
    rule: RankRule,
) -> f64 {
    let mut r = 0.0;
    for (i, &(b, d)) in nb.iter().enumerate() {
        if !heard(b) {
            continue;
        }
        let farther = d > own_dist;
        match rule {
            RankRule::Literal => {
                r += 2f64.powi(i as i32);
                if farther {
                    r -= 1.0;
                }
            }
            RankRule::CloserOnly => {
                if d < own_dist {
                    r += 2f64.powi(i as i32);
                }
            }
        }
    }
    r
}

/// `sum(2^i)` over `n` neighbors.
pub fn best_score(n: usize) -> f64 {
    2f64.powi(n as i32) - 1.0
}

/// `c * (1 - log2(R) / log2(best))` clamped to `[0, c]`; `R <= 0` waits `2c`.
pub fn in_building_delay(r: f64, best: f64, c_ms: f64) -> f64 {
    if r <= 0.0 {
        return 2.0 * c_ms;
    }
    if best <= 1.0 {
        return 0.0;
    }
    (c_ms * (1.0 - r.log2() / best.log2())).clamp(0.0, c_ms)
}
