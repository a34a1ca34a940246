//! Conduits and waypoint compression.
//!
//! A conduit is the closed region within `W/2` of the segment joining two
//! waypoint centroids. A building path is compressed into the waypoints at
//! which a single conduit stops covering the path's centroids.

use serde::{Deserialize, Serialize};

use crate::graph::BuildingPath;
use crate::mapdata::{BuildingId, BuildingMap, Point};

pub const DEFAULT_CONDUIT_WIDTH_M: f64 = 150.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conduit {
    pub a: Point,
    pub b: Point,
    pub width: f64,
}

impl Conduit {
    pub fn new(a: Point, b: Point, width: f64) -> Self {
        assert!(width > 0.0, "conduit width must be positive");
        Self { a, b, width }
    }

    /// Closed membership test: distance to segment `ab` at most `W/2`. A
    /// projection, a clamp and one squared comparison; no square root.
    #[inline]
    pub fn contains(&self, p: Point) -> bool {
        let abx = self.b.x - self.a.x;
        let aby = self.b.y - self.a.y;
        let apx = p.x - self.a.x;
        let apy = p.y - self.a.y;
        let half = self.width * 0.5;
        let r2 = half * half;
        let t = apx * abx + apy * aby;
        if t <= 0.0 {
            return apx * apx + apy * apy <= r2;
        }
        let len2 = abx * abx + aby * aby;
        if t >= len2 {
            let bpx = p.x - self.b.x;
            let bpy = p.y - self.b.y;
            return bpx * bpx + bpy * bpy <= r2;
        }
        let cross = apx * aby - apy * abx;
        cross * cross <= r2 * len2
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaypointRoute {
    pub waypoints: Vec<BuildingId>,
}

impl WaypointRoute {
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn conduits<'a>(&'a self, map: &'a BuildingMap, width: f64) -> impl Iterator<Item = Conduit> + 'a {
        let single = (self.waypoints.len() == 1).then(|| {
            let c = map.centroid(self.waypoints[0]);
            Conduit::new(c, c, width)
        });
        self.waypoints
            .windows(2)
            .map(move |w| Conduit::new(map.centroid(w[0]), map.centroid(w[1]), width))
            .chain(single)
    }
}

fn covers_all(map: &BuildingMap, c: &Conduit, buildings: &[BuildingId]) -> bool {
    buildings.iter().all(|&b| c.contains(map.centroid(b)))
}

/// Greedy waypoint selection over a building sequence: from the current
/// waypoint, extend the conduit end while every centroid in between stays
/// inside; at the first failure the last passing building becomes the next
/// waypoint. The destination is always the last waypoint.
pub fn compress_sequence(path: &[BuildingId], map: &BuildingMap, width: f64) -> WaypointRoute {
    WaypointRoute {
        waypoints: waypoint_positions(path, map, width)
            .into_iter()
            .map(|i| path[i])
            .collect(),
    }
}

/// Positions within `path` of the waypoints `compress_sequence` selects.
pub fn waypoint_positions(path: &[BuildingId], map: &BuildingMap, width: f64) -> Vec<usize> {
    assert!(!path.is_empty(), "cannot compress an empty path");
    assert!(width > 0.0, "conduit width must be positive");
    let mut out = vec![0];
    let mut start = 0;
    let mut last_ok = 0;
    let mut i = 1;
    while i < path.len() {
        let c = Conduit::new(map.centroid(path[start]), map.centroid(path[i]), width);
        if covers_all(map, &c, &path[start + 1..i]) {
            last_ok = i;
            i += 1;
        } else {
            // The conduit to the next building always covers both ends, so a
            // failure at `i` means `last_ok >= start + 1`.
            out.push(last_ok);
            start = last_ok;
        }
    }
    debug_assert!(path.len() == 1 || last_ok == path.len() - 1);
    if path.len() > 1 {
        out.push(path.len() - 1);
    }
    out
}

pub fn compress_waypoints(path: &BuildingPath, map: &BuildingMap, width: f64) -> WaypointRoute {
    compress_sequence(&path.buildings, map, width)
}

/// Coverage predicate: every building of `path` lies in at least one conduit
/// between consecutive waypoints of `route`.
pub fn route_covers(path: &[BuildingId], route: &WaypointRoute, map: &BuildingMap, width: f64) -> bool {
    let conduits: Vec<Conduit> = route.conduits(map, width).collect();
    path.iter()
        .all(|&b| conduits.iter().any(|c| c.contains(map.centroid(b))))
}
