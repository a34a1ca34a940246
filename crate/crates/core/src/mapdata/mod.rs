//! Building footprints, stable building ids and simulated device placement.

pub mod geometry;
mod cache;
mod devices;
mod geojson;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use self::cache::{read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION};
pub use self::devices::{devices_for_area, place_devices, Device, DeviceId, DeviceSet};
pub use self::geojson::{load_geojson, to_geojson, LoadOptions, Projection};
pub use self::geometry::{Bounds, Point};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("malformed map document: {0}")]
    Malformed(String),
    #[error("feature {index}: geometry type {kind:?} is not a Polygon")]
    NotPolygon { index: usize, kind: String },
    #[error("feature {index}: footprint is self-intersecting (edges {edge_a} and {edge_b})")]
    SelfIntersecting {
        index: usize,
        edge_a: usize,
        edge_b: usize,
    },
    #[error("feature {index}: footprint is degenerate ({reason})")]
    Degenerate { index: usize, reason: &'static str },
    #[error("coordinates look like longitude/latitude degrees; pass an equirectangular projection to ingest them")]
    GeographicCoordinates,
    #[error("map cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct BuildingId(pub u32);

impl BuildingId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for BuildingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Building {
    pub id: BuildingId,
    /// Outer ring, counter-clockwise, without a repeated closing vertex.
    pub footprint: Vec<Point>,
    pub centroid: Point,
    pub area: f64,
    pub bounds: Bounds,
    /// `id` property carried by the source feature, when it had a unique one.
    pub source_id: Option<String>,
}

impl Building {
    /// Validates and normalizes a ring. `index` is only used for error reports.
    pub fn from_ring(
        index: usize,
        mut ring: Vec<Point>,
        source_id: Option<String>,
    ) -> Result<Self, MapError> {
        if ring.len() > 1 && ring.first() == ring.last() {
            ring.pop();
        }
        ring.dedup();
        if ring.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(MapError::Degenerate {
                index,
                reason: "non-finite coordinate",
            });
        }
        if ring.len() < 3 {
            return Err(MapError::Degenerate {
                index,
                reason: "fewer than 3 distinct vertices",
            });
        }
        if let Some((a, b)) = geometry::first_self_intersection(&ring) {
            return Err(MapError::SelfIntersecting {
                index,
                edge_a: a,
                edge_b: b,
            });
        }
        let mut area = geometry::signed_area(&ring);
        if area == 0.0 {
            return Err(MapError::Degenerate {
                index,
                reason: "zero area",
            });
        }
        if area < 0.0 {
            ring.reverse();
            area = -area;
        }
        let centroid = geometry::centroid(&ring);
        let bounds = Bounds::of_points(&ring);
        Ok(Self {
            id: BuildingId(0),
            footprint: ring,
            centroid,
            area,
            bounds,
            source_id,
        })
    }

    pub fn contains(&self, p: Point) -> bool {
        self.bounds.contains(p) && geometry::contains_point(&self.footprint, p)
    }
}

/// Minimum distance between two footprints; 0 when they touch or overlap.
pub fn min_distance(a: &Building, b: &Building) -> f64 {
    geometry::polygon_distance(&a.footprint, &b.footprint)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingMap {
    buildings: Vec<Building>,
    bounds: Bounds,
}

impl BuildingMap {
    /// Assigns dense ids in `(centroid.x, centroid.y, area)` order. Input order
    /// does not matter.
    pub fn new(mut buildings: Vec<Building>) -> Self {
        buildings.sort_by(|a, b| {
            a.centroid
                .x
                .total_cmp(&b.centroid.x)
                .then(a.centroid.y.total_cmp(&b.centroid.y))
                .then(a.area.total_cmp(&b.area))
                .then_with(|| a.footprint_key().cmp(&b.footprint_key()))
        });
        let mut bounds = Bounds::empty();
        for (i, b) in buildings.iter_mut().enumerate() {
            b.id = BuildingId(i as u32);
            bounds = bounds.union(&b.bounds);
        }
        Self { buildings, bounds }
    }

    pub fn from_rings(rings: Vec<Vec<Point>>) -> Result<Self, MapError> {
        let buildings = rings
            .into_iter()
            .enumerate()
            .map(|(i, r)| Building::from_ring(i, r, None))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(buildings))
    }

    pub fn len(&self) -> usize {
        self.buildings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buildings.is_empty()
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn buildings(&self) -> &[Building] {
        &self.buildings
    }

    pub fn building(&self, id: BuildingId) -> &Building {
        &self.buildings[id.index()]
    }

    pub fn get(&self, id: BuildingId) -> Option<&Building> {
        self.buildings.get(id.index())
    }

    pub fn centroid(&self, id: BuildingId) -> Point {
        self.buildings[id.index()].centroid
    }

    pub fn ids(&self) -> impl Iterator<Item = BuildingId> + '_ {
        (0..self.buildings.len() as u32).map(BuildingId)
    }
}

impl Building {
    // Final tie-break for buildings with identical centroid and area.
    fn footprint_key(&self) -> Vec<(u64, u64)> {
        self.footprint
            .iter()
            .map(|p| (p.x.to_bits(), p.y.to_bits()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn square(x0: f64, y0: f64, s: f64) -> Vec<Point> {
        vec![
            Point::new(x0, y0),
            Point::new(x0 + s, y0),
            Point::new(x0 + s, y0 + s),
            Point::new(x0, y0 + s),
        ]
    }

    #[test]
    fn ids_follow_centroid_sort() {
        // File order: right, left, middle. Sorted by centroid x: left, middle, right.
        let map = BuildingMap::from_rings(vec![
            square(20.0, 0.0, 2.0),
            square(0.0, 0.0, 2.0),
            square(10.0, 5.0, 2.0),
        ])
        .unwrap();
        let xs: Vec<f64> = map.buildings().iter().map(|b| b.centroid.x).collect();
        assert_eq!(xs, vec![1.0, 11.0, 21.0]);
        assert_eq!(map.building(BuildingId(2)).centroid, Point::new(21.0, 1.0));
    }

    #[test]
    fn equal_x_sorts_by_y_then_area() {
        let map = BuildingMap::from_rings(vec![
            square(0.0, 10.0, 2.0),
            square(-1.0, -1.0, 4.0),
            square(0.0, 0.0, 2.0),
        ])
        .unwrap();
        let keys: Vec<(f64, f64)> = map.buildings().iter().map(|b| (b.centroid.y, b.area)).collect();
        assert_eq!(keys, vec![(1.0, 4.0), (1.0, 16.0), (11.0, 4.0)]);
    }

    #[test]
    fn clockwise_rings_are_normalized() {
        let mut ring = square(0.0, 0.0, 3.0);
        ring.reverse();
        let b = Building::from_ring(0, ring, None).unwrap();
        assert_eq!(b.area, 9.0);
        assert!(geometry::signed_area(&b.footprint) > 0.0);
    }

    #[test]
    fn degenerate_rings_rejected() {
        let line = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        // A collinear ring folds back on itself.
        assert!(matches!(
            Building::from_ring(4, line, None),
            Err(MapError::Degenerate { index: 4, .. } | MapError::SelfIntersecting { index: 4, .. })
        ));
        let two = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 0.0)];
        assert!(Building::from_ring(0, two, None).is_err());
    }

    #[test]
    fn min_distance_examples() {
        let map =
            BuildingMap::from_rings(vec![square(0.0, 0.0, 1.0), square(3.0, 0.0, 1.0)]).unwrap();
        let (a, b) = (map.building(BuildingId(0)), map.building(BuildingId(1)));
        assert_eq!(min_distance(a, b), 2.0);
        assert_eq!(min_distance(b, a), 2.0);
        assert_eq!(min_distance(a, a), 0.0);
    }
}
