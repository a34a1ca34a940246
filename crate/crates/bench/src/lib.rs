//! Shared fixtures for the benchmarks.

use mapmesh_core::mapdata::place_devices;
use mapmesh_core::simnet::{ScenarioConfig, World};
use mapmesh_core::synth::{block_city, grid_city};
use mapmesh_core::{BuildingMap, DeviceSet};

/// Synthetic street-block city of about `buildings` footprints.
pub fn city(buildings: usize) -> BuildingMap {
    block_city(buildings, 7)
}

/// Grid city world with devices for the default density and `seed`.
pub fn grid_world(side: usize, seed: u64) -> (World, DeviceSet) {
    let cfg = ScenarioConfig::default();
    let world = World::new(grid_city(side, side, 25.0, 50.0), cfg.range, cfg.cell_target).expect("grid city is non-empty");
    let devices = place_devices(&world.map, cfg.density, seed);
    (world, devices)
}
