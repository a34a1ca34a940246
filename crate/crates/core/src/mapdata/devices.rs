use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BuildingId, BuildingMap, Point};
use crate::rng::{stream, Purpose};

const MAX_PLACEMENT_ATTEMPTS: u32 = 10_000;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
pub struct DeviceId(pub u32);

impl DeviceId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: DeviceId,
    pub building_id: BuildingId,
    pub position: Point,
}

/// Devices grouped by building; ids are dense and follow building order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSet {
    devices: Vec<Device>,
    by_building: Vec<Range<u32>>,
}

impl DeviceSet {
    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn device(&self, id: DeviceId) -> &Device {
        &self.devices[id.index()]
    }

    pub fn in_building(&self, b: BuildingId) -> &[Device] {
        let r = &self.by_building[b.index()];
        &self.devices[r.start as usize..r.end as usize]
    }
}

/// `max(1, floor(area / density))`.
pub fn devices_for_area(area: f64, density: f64) -> usize {
    ((area / density).floor() as usize).max(1)
}

/// Places `max(1, floor(area / density))` devices per building, uniformly
/// inside each footprint. Each building draws from its own stream, so the
/// placement in one building does not depend on any other.
pub fn place_devices(map: &BuildingMap, density: f64, seed: u64) -> DeviceSet {
    assert!(density > 0.0, "device density must be positive");
    let mut devices = Vec::new();
    let mut by_building = Vec::with_capacity(map.len());
    for b in map.buildings() {
        let start = devices.len() as u32;
        let mut rng = stream(seed, Purpose::Placement, b.id.0 as u64);
        let bb = b.bounds;
        for _ in 0..devices_for_area(b.area, density) {
            let mut position = b.centroid;
            for _ in 0..MAX_PLACEMENT_ATTEMPTS {
                let p = Point::new(
                    bb.min_x + rng.random::<f64>() * bb.width(),
                    bb.min_y + rng.random::<f64>() * bb.height(),
                );
                if b.contains(p) {
                    position = p;
                    break;
                }
            }
            devices.push(Device {
                id: DeviceId(devices.len() as u32),
                building_id: b.id,
                position,
            });
        }
        by_building.push(start..devices.len() as u32);
    }
    DeviceSet {
        devices,
        by_building,
    }
}
