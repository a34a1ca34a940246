//! Discrete-event simulation of packet delivery over device meshes.

mod gpsr;
mod loss;
mod mapmesh;
mod radio;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::addressing::{build_grid, AddressError, GridIndex};
use crate::graph::{build_graph, BuildingGraph, PathMetric};
use crate::mapdata::{BuildingId, BuildingMap, DeviceId, DeviceSet};
use crate::protocol::{ProtocolParams, RankRule, TraceRecord, TRACE_HEADER};
use crate::rng::{stream, Purpose};
use crate::routes::{compress_table, precompute_tables, RoutingTable, TableParams};

pub use self::gpsr::{gabriel_neighbors, run_gpsr, run_gpsr_traced, simulate_gpsr_pairs, GpsrNet, GpsrParams, GpsrRoute};
pub use self::loss::{loss_probability, LossModel};
pub use self::mapmesh::{run_simulation, run_simulation_traced, simulate_pairs, PROPAGATION_MS};
pub use self::radio::{Link, Radio};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("map has no buildings")]
    EmptyMap,
    #[error("fewer than two buildings hold devices; no source/destination pairs exist")]
    TooFewDevices,
    #[error("mapmesh scenario needs routing tables")]
    MissingTables,
    #[error("scheme {0} cannot run on this simulator")]
    WrongScheme(Scheme),
    #[error(transparent)]
    Address(#[from] AddressError),
}

/// Forwarding scheme under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Scheme {
    MapMesh,
    /// Greedy perimeter forwarding with uniform location error of up to
    /// `location_error` meters per coordinate.
    Gpsr { location_error: f64 },
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::MapMesh => f.write_str("mapmesh"),
            Scheme::Gpsr { location_error } if *location_error == 0.0 => f.write_str("gpsr"),
            Scheme::Gpsr { location_error } => write!(f, "gpsr-{location_error}"),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t = s.trim().to_ascii_lowercase();
        if t == "mapmesh" {
            return Ok(Scheme::MapMesh);
        }
        if t == "gpsr" {
            return Ok(Scheme::Gpsr { location_error: 0.0 });
        }
        if let Some(e) = t.strip_prefix("gpsr-") {
            if let Ok(eps) = e.parse::<f64>() {
                if eps.is_finite() && eps >= 0.0 {
                    return Ok(Scheme::Gpsr { location_error: eps });
                }
            }
        }
        Err(format!("unknown scheme {s:?}: expected mapmesh, gpsr or gpsr-<meters>"))
    }
}

impl TryFrom<String> for Scheme {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl From<Scheme> for String {
    fn from(s: Scheme) -> String {
        s.to_string()
    }
}

/// Map with its building graph and grid.
#[derive(Debug, Clone)]
pub struct World {
    pub map: BuildingMap,
    pub graph: BuildingGraph,
    pub grid: GridIndex,
}

impl World {
    pub fn new(map: BuildingMap, range: f64, cell_target: f64) -> Result<Self, SimError> {
        if map.is_empty() {
            return Err(SimError::EmptyMap);
        }
        let graph = build_graph(&map, range);
        let grid = build_grid(&map, cell_target)?;
        Ok(Self { map, graph, grid })
    }

    /// Compressed routing tables for every building.
    pub fn tables(&self, params: &TableParams) -> Vec<RoutingTable> {
        let (tables, _) = precompute_tables(&self.graph, &self.map, &self.grid, params);
        tables.iter().map(|t| compress_table(t, &self.grid)).collect()
    }
}

/// Everything one run needs; borrowed parts are shared across runs.
#[derive(Debug, Clone, Copy)]
pub struct SimScenario<'a> {
    pub world: &'a World,
    pub devices: &'a DeviceSet,
    pub tables: Option<&'a [RoutingTable]>,
    pub scheme: Scheme,
    pub protocol: ProtocolParams,
    pub loss: LossModel,
    pub pairs: usize,
    pub seed: u64,
    pub packet_interval_ms: f64,
    /// Events of a packet later than this after its injection are dropped.
    pub wall_ms: f64,
    pub gpsr: GpsrParams,
}

/// Runs `s` with the simulator its scheme needs.
pub fn run(s: &SimScenario) -> Result<SimMetrics, SimError> {
    match s.scheme {
        Scheme::MapMesh => run_simulation(s),
        Scheme::Gpsr { .. } => run_gpsr(s),
    }
}

pub fn run_traced(s: &SimScenario) -> Result<(SimMetrics, Vec<TraceRecord>), SimError> {
    match s.scheme {
        Scheme::MapMesh => run_simulation_traced(s),
        Scheme::Gpsr { .. } => run_gpsr_traced(s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pair {
    pub src: DeviceId,
    pub dst: DeviceId,
}

/// `count` source/destination device pairs in distinct buildings.
pub fn pick_pairs(devices: &DeviceSet, count: usize, seed: u64) -> Result<Vec<Pair>, SimError> {
    let all = devices.devices();
    let first = all.first().ok_or(SimError::TooFewDevices)?.building_id;
    if all.iter().all(|d| d.building_id == first) {
        return Err(SimError::TooFewDevices);
    }
    let mut rng = stream(seed, Purpose::Pairs, 0);
    let n = all.len();
    Ok((0..count)
        .map(|_| loop {
            let s = &all[rng.random_range(0..n)];
            let d = &all[rng.random_range(0..n)];
            if s.building_id != d.building_id {
                break Pair { src: s.id, dst: d.id };
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketOutcome {
    pub src: DeviceId,
    pub dst: DeviceId,
    pub dest_building: BuildingId,
    pub delivered: bool,
    /// Hops to the first delivery; 0 when undelivered.
    pub hops: u32,
    pub latency_ms: f64,
    pub transmissions: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub scheme: Scheme,
    pub pairs: usize,
    pub delivered: usize,
    pub delivery_rate: f64,
    pub transmissions: u64,
    /// Means over delivered packets; 0 when none arrived.
    pub mean_hops: f64,
    pub mean_latency_ms: f64,
    pub packets: Vec<PacketOutcome>,
}

impl SimMetrics {
    pub fn from_packets(scheme: Scheme, packets: Vec<PacketOutcome>) -> Self {
        let pairs = packets.len();
        let delivered = packets.iter().filter(|p| p.delivered).count();
        let transmissions = packets.iter().map(|p| p.transmissions).sum();
        let mean = |f: &dyn Fn(&PacketOutcome) -> f64| {
            if delivered == 0 {
                0.0
            } else {
                packets.iter().filter(|p| p.delivered).map(f).sum::<f64>() / delivered as f64
            }
        };
        Self {
            scheme,
            pairs,
            delivered,
            delivery_rate: if pairs == 0 { 0.0 } else { delivered as f64 / pairs as f64 },
            transmissions,
            mean_hops: mean(&|p| p.hops as f64),
            mean_latency_ms: mean(&|p| p.latency_ms),
            packets,
        }
    }
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub scheme: Scheme,
    pub ell: f64,
    #[serde(rename = "W")]
    pub w: f64,
    pub k: PathMetric,
    pub seed: u64,
    pub delivery_rate: f64,
    pub transmissions: u64,
    pub mean_hops: f64,
    pub mean_latency_ms: f64,
}

impl MetricsRow {
    pub fn new(scenario: &str, cfg: &ScenarioConfig, seed: u64, m: &SimMetrics) -> Self {
        Self {
            scenario: scenario.to_string(),
            scheme: m.scheme,
            ell: cfg.ell,
            w: cfg.conduit_width,
            k: cfg.k,
            seed,
            delivery_rate: m.delivery_rate,
            transmissions: m.transmissions,
            mean_hops: m.mean_hops,
            mean_latency_ms: m.mean_latency_ms,
        }
    }
}

pub const METRICS_HEADER: &str =
    "scenario,scheme,ell,W,k,seed,delivery_rate,transmissions,mean_hops,mean_latency_ms";

pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(METRICS_HEADER.split(','))?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trace_csv<W: Write>(trace: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in trace {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

/// Human-editable scenario description; every key is optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub map: Option<PathBuf>,
    pub scheme: Scheme,
    pub ell: f64,
    pub conduit_width: f64,
    pub k: PathMetric,
    pub pairs: usize,
    pub seed: u64,
    /// Seed for routing-table representatives, kept apart from `seed` so
    /// seed sweeps share one set of tables.
    pub table_seed: u64,
    /// Square meters of footprint per device.
    pub density: f64,
    pub range: f64,
    pub cell_target: f64,
    pub cliff_start: f64,
    pub cliff_end: f64,
    pub per_packet_rates: bool,
    pub suppression: bool,
    pub rank_rule: RankRule,
    pub unit_ms: f64,
    pub in_building_ms: f64,
    pub jitter_ms: f64,
    pub hop_budget: u16,
    pub packet_interval_ms: f64,
    pub wall_ms: f64,
    pub gpsr_retransmits: u32,
    pub gpsr_ttl: u32,
    pub trace: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = ProtocolParams::default();
        let l = LossModel::default();
        let g = GpsrParams::default();
        Self {
            name: "scenario".into(),
            map: None,
            scheme: Scheme::MapMesh,
            ell: l.ell,
            conduit_width: p.conduit_width,
            k: PathMetric::Power(10.0),
            pairs: 100,
            seed: 0,
            table_seed: 0,
            density: 200.0,
            range: crate::graph::DEFAULT_RANGE_M,
            cell_target: crate::addressing::DEFAULT_CELL_TARGET_M,
            cliff_start: l.cliff_start,
            cliff_end: l.cliff_end,
            per_packet_rates: l.per_packet_rates,
            suppression: p.suppression,
            rank_rule: p.rank_rule,
            unit_ms: p.unit_ms,
            in_building_ms: p.in_building_ms,
            jitter_ms: p.jitter_ms,
            hop_budget: p.hop_budget,
            packet_interval_ms: 1000.0,
            wall_ms: 60_000.0,
            gpsr_retransmits: g.retransmits,
            gpsr_ttl: g.ttl,
            trace: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(s: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    /// Range and consistency checks; the message names the offending key.
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("conduit_width", self.conduit_width),
            ("density", self.density),
            ("range", self.range),
            ("cell_target", self.cell_target),
            ("cliff_end", self.cliff_end),
            ("packet_interval_ms", self.packet_interval_ms),
            ("wall_ms", self.wall_ms),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{key} must be a positive number, got {v}"));
            }
        }
        if !(0.0..=1.0).contains(&self.ell) {
            return Err(format!("ell must lie in [0, 1], got {}", self.ell));
        }
        if !(self.cliff_start >= 0.0 && self.cliff_start < self.cliff_end) {
            return Err(format!(
                "cliff_start must lie in [0, cliff_end), got {} with cliff_end {}",
                self.cliff_start, self.cliff_end
            ));
        }
        for (key, v) in [("unit_ms", self.unit_ms), ("in_building_ms", self.in_building_ms), ("jitter_ms", self.jitter_ms)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(format!("{key} must be non-negative, got {v}"));
            }
        }
        if self.pairs == 0 {
            return Err("pairs must be at least 1".into());
        }
        Ok(())
    }

    pub fn protocol(&self) -> ProtocolParams {
        ProtocolParams {
            conduit_width: self.conduit_width,
            unit_ms: self.unit_ms,
            in_building_ms: self.in_building_ms,
            jitter_ms: self.jitter_ms,
            hop_budget: self.hop_budget,
            suppression: self.suppression,
            rank_rule: self.rank_rule,
            ..ProtocolParams::default()
        }
    }

    pub fn loss(&self) -> LossModel {
        LossModel {
            cliff_start: self.cliff_start,
            cliff_end: self.cliff_end,
            ell: self.ell,
            per_packet_rates: self.per_packet_rates,
        }
    }

    pub fn table_params(&self) -> TableParams {
        TableParams {
            metric: self.k,
            conduit_width: self.conduit_width,
            seed: self.table_seed,
        }
    }

    pub fn gpsr(&self) -> GpsrParams {
        GpsrParams {
            retransmits: self.gpsr_retransmits,
            ttl: self.gpsr_ttl,
        }
    }

    pub fn scenario<'a>(
        &self,
        world: &'a World,
        devices: &'a DeviceSet,
        tables: Option<&'a [RoutingTable]>,
    ) -> SimScenario<'a> {
        SimScenario {
            world,
            devices,
            tables,
            scheme: self.scheme,
            protocol: self.protocol(),
            loss: self.loss(),
            pairs: self.pairs,
            seed: self.seed,
            packet_interval_ms: self.packet_interval_ms,
            wall_ms: self.wall_ms,
            gpsr: self.gpsr(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mapdata::place_devices;
    use crate::synth::grid_city;

    #[test]
    fn scheme_strings() {
        for (s, v) in [
            ("mapmesh", Scheme::MapMesh),
            ("gpsr", Scheme::Gpsr { location_error: 0.0 }),
            ("gpsr-15", Scheme::Gpsr { location_error: 15.0 }),
            ("gpsr-2.5", Scheme::Gpsr { location_error: 2.5 }),
        ] {
            assert_eq!(s.parse::<Scheme>().unwrap(), v);
            assert_eq!(v.to_string(), s);
        }
        assert!("gpsr--1".parse::<Scheme>().is_err());
        assert!("aodv".parse::<Scheme>().is_err());
    }

    #[test]
    fn config_roundtrip_and_partial_files() {
        let cfg = ScenarioConfig::from_toml(
            "scheme = \"gpsr-15\"\nell = 0.4\nk = \"mst\"\npairs = 20\nmap = \"city.geojson\"\n",
        )
        .unwrap();
        assert_eq!(cfg.scheme, Scheme::Gpsr { location_error: 15.0 });
        assert_eq!(cfg.k, PathMetric::Minimax);
        assert_eq!(cfg.pairs, 20);
        assert_eq!(cfg.conduit_width, 150.0);
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        assert_eq!(ScenarioConfig::from_toml("k = 1").unwrap().k, PathMetric::Power(1.0));
        assert!(ScenarioConfig::from_toml("colour = 3").is_err());
        assert!(ScenarioConfig::from_toml("k = 0.5").is_err());
    }

    #[test]
    fn validation_names_the_key() {
        let mut cfg = ScenarioConfig {
            ell: 1.5,
            ..ScenarioConfig::default()
        };
        assert!(cfg.validate().unwrap_err().contains("ell"));
        cfg.ell = 0.2;
        cfg.conduit_width = 0.0;
        assert!(cfg.validate().unwrap_err().contains("conduit_width"));
        assert!(ScenarioConfig::default().validate().is_ok());
    }

    #[test]
    fn pairs_are_seeded_and_cross_building() {
        let map = grid_city(4, 4, 20.0, 40.0);
        let devices = place_devices(&map, 200.0, 1);
        let a = pick_pairs(&devices, 50, 7).unwrap();
        assert_eq!(a, pick_pairs(&devices, 50, 7).unwrap());
        assert_ne!(a, pick_pairs(&devices, 50, 8).unwrap());
        for p in &a {
            assert_ne!(devices.device(p.src).building_id, devices.device(p.dst).building_id);
        }
        let one = place_devices(&grid_city(1, 1, 20.0, 40.0), 200.0, 1);
        assert!(matches!(pick_pairs(&one, 5, 0), Err(SimError::TooFewDevices)));
    }

    #[test]
    fn metrics_csv_layout() {
        let cfg = ScenarioConfig::default();
        let m = SimMetrics::from_packets(Scheme::MapMesh, vec![]);
        let mut out = Vec::new();
        write_metrics_csv(&[MetricsRow::new("grid", &cfg, 3, &m)], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), METRICS_HEADER);
        assert_eq!(lines.next().unwrap(), "grid,mapmesh,0.0,150.0,10,3,0.0,0,0.0,0.0");
    }
}
