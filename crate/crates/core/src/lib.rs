//! Map-based routing for city-scale Wi-Fi mesh networks.
//!
//! Buildings taken from a map form a graph; routes are computed between
//! buildings, compressed into waypoints, and distributed as per-building
//! prefix routing tables over a hierarchical grid address space. Devices
//! rebroadcast packets inside the conduit between consecutive waypoints and
//! suppress redundant copies with delay timers. A deterministic discrete-event
//! simulator and a GPSR baseline evaluate the scheme.

pub mod addressing;
pub mod corridor;
pub mod graph;
pub mod mapdata;
pub mod protocol;
pub mod rng;
pub mod routes;
pub mod simnet;
pub mod synth;

pub use mapdata::{Building, BuildingId, BuildingMap, Device, DeviceId, DeviceSet, Point};
