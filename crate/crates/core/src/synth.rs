//! Synthetic cities for tests, benchmarks and experiments.

use rand::Rng;

use crate::mapdata::{Building, BuildingMap, Point};
use crate::rng::{stream, Purpose};

fn rect(x: f64, y: f64, w: f64, h: f64) -> Vec<Point> {
    vec![
        Point::new(x, y),
        Point::new(x + w, y),
        Point::new(x + w, y + h),
        Point::new(x, y + h),
    ]
}

/// `nx * ny` square buildings of side `size` on a `pitch` lattice.
pub fn grid_city(nx: usize, ny: usize, size: f64, pitch: f64) -> BuildingMap {
    assert!(size > 0.0 && pitch > size, "pitch must exceed building size");
    let buildings = (0..nx)
        .flat_map(|i| (0..ny).map(move |j| (i, j)))
        .enumerate()
        .map(|(n, (i, j))| {
            Building::from_ring(n, rect(i as f64 * pitch, j as f64 * pitch, size, size), None)
                .expect("valid rectangle")
        })
        .collect();
    BuildingMap::new(buildings)
}

pub const BLOCK_SIDE: usize = 4;
const LOT_PITCH_M: f64 = 30.0;
const STREET_M: f64 = 25.0;
const VACANT_SHARE: f64 = 0.15;

/// Roughly `target` buildings in square blocks of 4 x 4 lots separated by
/// streets. Lots hold a rectangle of 12 to 24 m per side with a few meters of
/// jitter; about one block in seven is left vacant.
pub fn block_city(target: usize, seed: u64) -> BuildingMap {
    assert!(target > 0, "target must be positive");
    let per_block = BLOCK_SIDE * BLOCK_SIDE;
    let blocks_needed = (target as f64 / (per_block as f64 * (1.0 - VACANT_SHARE))).ceil() as usize;
    let side = (blocks_needed as f64).sqrt().ceil() as usize;
    let block_pitch = BLOCK_SIDE as f64 * LOT_PITCH_M + STREET_M;
    let mut rng = stream(seed, Purpose::Synthetic, 0);
    let mut buildings = Vec::new();
    for bx in 0..side {
        for by in 0..side {
            if rng.random::<f64>() < VACANT_SHARE {
                continue;
            }
            for lx in 0..BLOCK_SIDE {
                for ly in 0..BLOCK_SIDE {
                    if buildings.len() == target {
                        break;
                    }
                    let w = rng.random_range(12.0..24.0);
                    let h = rng.random_range(12.0..24.0);
                    let slack_x = LOT_PITCH_M - 4.0 - w;
                    let slack_y = LOT_PITCH_M - 4.0 - h;
                    let x = bx as f64 * block_pitch + lx as f64 * LOT_PITCH_M + 2.0 + rng.random_range(0.0..=slack_x);
                    let y = by as f64 * block_pitch + ly as f64 * LOT_PITCH_M + 2.0 + rng.random_range(0.0..=slack_y);
                    let n = buildings.len();
                    buildings.push(Building::from_ring(n, rect(x, y, w, h), None).expect("valid rectangle"));
                }
            }
        }
    }
    BuildingMap::new(buildings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, components};

    #[test]
    fn grid_city_shape() {
        let map = grid_city(8, 8, 25.0, 50.0);
        assert_eq!(map.len(), 64);
        assert_eq!(map.bounds().width(), 375.0);
        let g = build_graph(&map, 100.0);
        assert_eq!(components(&g).0, 1);
    }

    #[test]
    fn block_city_is_seeded_and_connected() {
        let a = block_city(500, 3);
        let b = block_city(500, 3);
        assert_eq!(a, b);
        assert!(a.len() <= 500 && a.len() > 400, "{}", a.len());
        assert_ne!(block_city(500, 4), a);
        let g = build_graph(&a, 100.0);
        let (count, labels) = components(&g);
        let mut sizes = vec![0usize; count];
        for l in labels {
            sizes[l as usize] += 1;
        }
        assert!(*sizes.iter().max().unwrap() as f64 > 0.95 * a.len() as f64);
    }
}
