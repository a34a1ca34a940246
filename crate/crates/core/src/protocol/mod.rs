//! Packet header codec and the per-device forwarding state machine.

mod header;
mod suppression;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::addressing::{GridAddress, GridIndex};
use crate::corridor::Conduit;
use crate::graph::BuildingGraph;
use crate::mapdata::{BuildingId, BuildingMap, DeviceId};
use crate::routes::RoutingTable;

pub use self::header::{decode_header, encode_header, HeaderError, PacketHeader, FIXED_HEADER_BYTES, HEADER_VERSION};
pub use self::suppression::{
    best_score, in_building_delay, in_building_rank, inter_building_delay, sorted_neighbors, RankRule,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolParams {
    pub conduit_width: f64,
    /// Inter-building delay unit `U`.
    pub unit_ms: f64,
    /// In-building delay constant `c`.
    pub in_building_ms: f64,
    pub jitter_ms: f64,
    pub hop_budget: u16,
    pub heard_window_ms: f64,
    pub duplicate_cache: usize,
    /// Off: plain conduit flooding, every in-conduit device rebroadcasts
    /// once after jitter.
    pub suppression: bool,
    pub rank_rule: RankRule,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            conduit_width: crate::corridor::DEFAULT_CONDUIT_WIDTH_M,
            unit_ms: 25.0,
            in_building_ms: 10.0,
            jitter_ms: 2.0,
            hop_budget: 1024,
            heard_window_ms: 60_000.0,
            duplicate_cache: 4096,
            suppression: true,
            rank_rule: RankRule::Literal,
        }
    }
}

impl ProtocolParams {
    /// The smallest inter-building delay exceeds the largest in-building one.
    pub fn delays_layered(&self) -> bool {
        self.unit_ms > 2.0 * self.in_building_ms + self.jitter_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DropReason {
    Duplicate,
    OutOfConduit,
    Expired,
    Unreachable,
    Backward,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ForwardAction {
    Deliver,
    Drop(DropReason),
    Schedule { delay_ms: f64 },
    Suppress,
}

impl fmt::Display for ForwardAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForwardAction::Deliver => f.write_str("deliver"),
            ForwardAction::Drop(r) => write!(f, "drop-{}", match r {
                DropReason::Duplicate => "duplicate",
                DropReason::OutOfConduit => "out-of-conduit",
                DropReason::Expired => "expired",
                DropReason::Unreachable => "unreachable",
                DropReason::Backward => "backward",
            }),
            ForwardAction::Schedule { delay_ms } => write!(f, "schedule-{delay_ms:.3}"),
            ForwardAction::Suppress => f.write_str("suppress"),
        }
    }
}

/// Packet identity: `(source building, sequence)`.
pub type PacketKey = (BuildingId, u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Disposition {
    Broadcast,
    /// Suppressed while heading for this waypoint.
    Suppressed(BuildingId),
}

/// Bounded least-recently-used map of packet dispositions.
#[derive(Debug, Clone)]
struct DuplicateCache {
    cap: usize,
    tick: u64,
    entries: HashMap<PacketKey, (Disposition, u64)>,
    order: BTreeMap<u64, PacketKey>,
}

impl DuplicateCache {
    fn new(cap: usize) -> Self {
        Self {
            cap: cap.max(1),
            tick: 0,
            entries: HashMap::new(),
            order: BTreeMap::new(),
        }
    }

    fn get(&mut self, key: PacketKey) -> Option<Disposition> {
        let (d, t) = self.entries.get_mut(&key)?;
        self.order.remove(t);
        self.tick += 1;
        *t = self.tick;
        self.order.insert(self.tick, key);
        Some(*d)
    }

    fn insert(&mut self, key: PacketKey, d: Disposition) {
        self.tick += 1;
        if let Some((_, t)) = self.entries.insert(key, (d, self.tick)) {
            self.order.remove(&t);
        }
        self.order.insert(self.tick, key);
        while self.entries.len() > self.cap {
            let (_, old) = self.order.pop_first().expect("order tracks entries");
            self.entries.remove(&old);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pending {
    /// Header to broadcast when the timer fires, before the sender and hop
    /// budget are stamped.
    pub header: PacketHeader,
    pub due_ms: f64,
}

/// Read-only context shared by every device.
#[derive(Clone, Copy)]
pub struct ProtocolContext<'a> {
    pub graph: &'a BuildingGraph,
    pub map: &'a BuildingMap,
    pub grid: &'a GridIndex,
    pub tables: &'a [RoutingTable],
    pub params: &'a ProtocolParams,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub device: DeviceId,
    pub building: BuildingId,
    heard: HashMap<BuildingId, f64>,
    cache: DuplicateCache,
    pending: HashMap<PacketKey, Pending>,
}

impl NodeState {
    pub fn new(device: DeviceId, building: BuildingId, params: &ProtocolParams) -> Self {
        Self {
            device,
            building,
            heard: HashMap::new(),
            cache: DuplicateCache::new(params.duplicate_cache),
            pending: HashMap::new(),
        }
    }

    /// Neighbor buildings heard within the window ending at `now_ms`.
    pub fn heard_recently(&self, b: BuildingId, now_ms: f64, window_ms: f64) -> bool {
        self.heard.get(&b).is_some_and(|&t| now_ms - t <= window_ms)
    }

    pub fn heard_buildings(&self) -> impl Iterator<Item = BuildingId> + '_ {
        self.heard.keys().copied()
    }

    pub fn pending(&self, key: PacketKey) -> Option<&Pending> {
        self.pending.get(&key)
    }

    pub fn has_broadcast(&mut self, key: PacketKey) -> bool {
        self.cache.get(key) == Some(Disposition::Broadcast)
    }

    /// Builds the header a source device sends to `dest`: both waypoints
    /// are the own building when the destination is in it, otherwise the
    /// next waypoint comes from the own table. `None` when unreachable.
    pub fn originate(&mut self, ctx: &ProtocolContext, dest: GridAddress, seq: u32) -> Option<PacketHeader> {
        let own_addr = ctx.grid.address_of(self.building).ok()?;
        let next = if dest == own_addr {
            self.building
        } else {
            ctx.tables[self.building.index()].lookup(&dest)?
        };
        let h = PacketHeader {
            version: HEADER_VERSION,
            flags: 0,
            source: self.building,
            seq,
            sender: self.building,
            prev_waypoint: self.building,
            next_waypoint: next,
            dest,
            hop_budget: ctx.params.hop_budget,
        };
        self.cache.insert((h.source, h.seq), Disposition::Broadcast);
        Some(h)
    }

    /// One action per received copy. A copy of a packet that already has a
    /// pending timer is an overheard rebroadcast and goes through
    /// [`NodeState::handle_overhear`], unless it comes from a later leg of
    /// the route.
    pub fn handle_receive<R: Rng>(
        &mut self,
        ctx: &ProtocolContext,
        h: &PacketHeader,
        now_ms: f64,
        rng: &mut R,
    ) -> ForwardAction {
        let p = ctx.params;
        if h.sender != self.building && ctx.graph.is_neighbor(self.building, h.sender) {
            self.heard.insert(h.sender, now_ms);
        }
        if ctx.grid.address_of(self.building).ok() == Some(h.dest) {
            return ForwardAction::Deliver;
        }
        let key = (h.source, h.seq);
        if let Some(pending) = self.pending.get(&key) {
            if h.prev_waypoint != pending.header.next_waypoint || h.prev_waypoint == pending.header.prev_waypoint {
                return self.handle_overhear(ctx, key, h.sender);
            }
            // The copy has passed the waypoint the timer was aimed at; it
            // starts a new leg and replaces the stale timer.
            self.pending.remove(&key);
        }
        match self.cache.get(key) {
            Some(Disposition::Suppressed(wp)) if h.prev_waypoint == wp && h.next_waypoint != wp => {}
            Some(_) => return ForwardAction::Drop(DropReason::Duplicate),
            None => {}
        }

        let mut out = *h;
        if self.building == h.next_waypoint {
            match ctx.tables[self.building.index()].lookup(&h.dest) {
                Some(next) => {
                    out.prev_waypoint = h.next_waypoint;
                    out.next_waypoint = next;
                }
                None => return ForwardAction::Drop(DropReason::Unreachable),
            }
        }
        let conduit = Conduit::new(
            ctx.map.centroid(out.prev_waypoint),
            ctx.map.centroid(out.next_waypoint),
            p.conduit_width,
        );
        if !conduit.contains(ctx.map.centroid(self.building)) {
            return ForwardAction::Drop(DropReason::OutOfConduit);
        }
        if h.hop_budget == 0 {
            return ForwardAction::Drop(DropReason::Expired);
        }

        let jitter = if p.jitter_ms > 0.0 {
            rng.random_range(0.0..=p.jitter_ms)
        } else {
            0.0
        };
        let delay_ms = if p.suppression {
            let Some(inter) =
                inter_building_delay(ctx.graph, ctx.map, h.sender, self.building, h.next_waypoint, p.unit_ms)
            else {
                return ForwardAction::Drop(DropReason::Backward);
            };
            inter + self.in_building_delay(ctx, out.next_waypoint, now_ms) + jitter
        } else {
            jitter
        };
        self.pending.insert(
            key,
            Pending {
                header: out,
                due_ms: now_ms + delay_ms,
            },
        );
        ForwardAction::Schedule { delay_ms }
    }

    fn in_building_delay(&self, ctx: &ProtocolContext, next_wp: BuildingId, now_ms: f64) -> f64 {
        let p = ctx.params;
        let nb = sorted_neighbors(ctx.graph, ctx.map, self.building, next_wp);
        let own_dist = ctx.map.centroid(self.building).dist(ctx.map.centroid(next_wp));
        let r = in_building_rank(
            &nb,
            |b| self.heard_recently(b, now_ms, p.heard_window_ms),
            own_dist,
            p.rank_rule,
        );
        in_building_delay(r, best_score(nb.len()), p.in_building_ms)
    }

    /// Another device rebroadcast a packet this device is holding. Suppress
    /// when that device's building is no farther from the pending next
    /// waypoint than the own building; otherwise keep the timer and drop the
    /// copy.
    pub fn handle_overhear(&mut self, ctx: &ProtocolContext, key: PacketKey, sender: BuildingId) -> ForwardAction {
        let Some(pending) = self.pending.get(&key) else {
            return ForwardAction::Drop(DropReason::Duplicate);
        };
        if !ctx.params.suppression {
            return ForwardAction::Drop(DropReason::Duplicate);
        }
        let wp = ctx.map.centroid(pending.header.next_waypoint);
        let d_sender = ctx.map.centroid(sender).dist(wp);
        let d_own = ctx.map.centroid(self.building).dist(wp);
        if d_sender <= d_own {
            let wp = pending.header.next_waypoint;
            self.pending.remove(&key);
            self.cache.insert(key, Disposition::Suppressed(wp));
            ForwardAction::Suppress
        } else {
            ForwardAction::Drop(DropReason::Duplicate)
        }
    }

    /// Timer expiry: returns the header to broadcast, stamped with the own
    /// building as sender and one hop spent. `None` when the timer was
    /// cancelled.
    pub fn fire(&mut self, key: PacketKey) -> Option<PacketHeader> {
        let pending = self.pending.remove(&key)?;
        self.cache.insert(key, Disposition::Broadcast);
        let mut h = pending.header;
        h.sender = self.building;
        h.hop_budget -= 1;
        Some(h)
    }
}

/// One line of the packet trace: `t_ms,event,device,building,src,seq,action`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t_ms: f64,
    pub event: &'static str,
    pub device: DeviceId,
    pub building: BuildingId,
    pub src: BuildingId,
    pub seq: u32,
    pub action: String,
}

pub const TRACE_HEADER: &str = "t_ms,event,device,building,src,seq,action";

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:.3},{},{},{},{},{},{}",
            self.t_ms, self.event, self.device.0, self.building, self.src, self.seq, self.action
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::addressing::build_grid;
    use crate::graph::build_graph;
    use crate::mapdata::Point;
    use crate::routes::{precompute_tables, TableParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Fixture {
        map: BuildingMap,
        graph: BuildingGraph,
        grid: GridIndex,
        tables: Vec<RoutingTable>,
        params: ProtocolParams,
    }

    impl Fixture {
        /// Five 10 m squares in a row, 40 m apart, plus one 200 m off the line.
        fn new(params: ProtocolParams) -> Self {
            let mut rings: Vec<Vec<Point>> = (0..5).map(|i| square(i as f64 * 50.0, 0.0)).collect();
            rings.push(square(100.0, 200.0));
            let map = BuildingMap::from_rings(rings).unwrap();
            let graph = build_graph(&map, 100.0);
            let grid = build_grid(&map, 100.0).unwrap();
            let (tables, _) = precompute_tables(&graph, &map, &grid, &TableParams::default());
            Self {
                map,
                graph,
                grid,
                tables,
                params,
            }
        }

        fn ctx(&self) -> ProtocolContext<'_> {
            ProtocolContext {
                graph: &self.graph,
                map: &self.map,
                grid: &self.grid,
                tables: &self.tables,
                params: &self.params,
            }
        }

        fn at(&self, x: f64, y: f64) -> BuildingId {
            self.map
                .buildings()
                .iter()
                .find(|b| b.centroid == Point::new(x + 5.0, y + 5.0))
                .unwrap()
                .id
        }

        fn header(&self, sender: BuildingId, prev: BuildingId, next: BuildingId, dest: BuildingId) -> PacketHeader {
            PacketHeader {
                version: HEADER_VERSION,
                flags: 0,
                source: prev,
                seq: 1,
                sender,
                prev_waypoint: prev,
                next_waypoint: next,
                dest: self.grid.address_of(dest).unwrap(),
                hop_budget: 10,
            }
        }
    }

    fn square(x: f64, y: f64) -> Vec<Point> {
        vec![
            Point::new(x, y),
            Point::new(x + 10.0, y),
            Point::new(x + 10.0, y + 10.0),
            Point::new(x, y + 10.0),
        ]
    }

    fn no_jitter() -> ProtocolParams {
        ProtocolParams {
            jitter_ms: 0.0,
            ..ProtocolParams::default()
        }
    }

    #[test]
    fn default_constants_are_layered() {
        assert!(ProtocolParams::default().delays_layered());
    }

    #[test]
    fn destination_building_delivers() {
        let f = Fixture::new(ProtocolParams::default());
        let (a, e) = (f.at(0.0, 0.0), f.at(200.0, 0.0));
        let mut node = NodeState::new(DeviceId(0), e, &f.params);
        let h = f.header(f.at(150.0, 0.0), a, e, e);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(node.handle_receive(&f.ctx(), &h, 0.0, &mut rng), ForwardAction::Deliver);
    }

    #[test]
    fn off_conduit_device_drops() {
        let f = Fixture::new(ProtocolParams::default());
        let (a, e, off) = (f.at(0.0, 0.0), f.at(200.0, 0.0), f.at(100.0, 200.0));
        let mut node = NodeState::new(DeviceId(0), off, &f.params);
        let h = f.header(a, a, e, e);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            node.handle_receive(&f.ctx(), &h, 0.0, &mut rng),
            ForwardAction::Drop(DropReason::OutOfConduit)
        );
    }

    #[test]
    fn mid_conduit_delay_matches_reference() {
        let f = Fixture::new(no_jitter());
        let (a, b, c, d, e) = (
            f.at(0.0, 0.0),
            f.at(50.0, 0.0),
            f.at(100.0, 0.0),
            f.at(150.0, 0.0),
            f.at(200.0, 0.0),
        );
        let mut node = NodeState::new(DeviceId(0), c, &f.params);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Earlier traffic from d heard at t = 0.
        let probe = f.header(d, e, a, a);
        node.handle_receive(&f.ctx(), &PacketHeader { seq: 99, ..probe }, 0.0, &mut rng);
        assert!(node.heard_recently(d, 10.0, 60_000.0));

        let h = f.header(b, a, e, e);
        let action = node.handle_receive(&f.ctx(), &h, 10.0, &mut rng);
        // Footprints are 40 m apart, so b neighbors a, c (40 m) and d (90 m).
        // By distance to e: d, c, a -> c is second, 2U.
        // c's neighbors by decreasing distance to e: a (200), b (150), d (50),
        // e (0). Heard: b (index 1, farther than c's 100 m) and d (index 2):
        // R = 2 - 1 + 4 = 5 of best 15.
        let inter = 2.0 * 25.0;
        let within = 10.0 * (1.0 - 5f64.log2() / 15f64.log2());
        match action {
            ForwardAction::Schedule { delay_ms } => assert!((delay_ms - (inter + within)).abs() < 1e-9, "{delay_ms}"),
            other => panic!("{other:?}"),
        }
        let out = node.fire((h.source, h.seq)).unwrap();
        assert_eq!(out.sender, c);
        assert_eq!(out.hop_budget, 9);
        assert_eq!(node.handle_receive(&f.ctx(), &h, 20.0, &mut rng), ForwardAction::Drop(DropReason::Duplicate));
    }

    #[test]
    fn waypoint_advances_and_backward_refuses() {
        let f = Fixture::new(no_jitter());
        let (a, b, c, e) = (f.at(0.0, 0.0), f.at(50.0, 0.0), f.at(100.0, 0.0), f.at(200.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        // Packet heading to waypoint c arrives at c.
        let mut at_c = NodeState::new(DeviceId(0), c, &f.params);
        let h = f.header(b, a, c, e);
        assert!(matches!(at_c.handle_receive(&f.ctx(), &h, 0.0, &mut rng), ForwardAction::Schedule { .. }));
        let pending = at_c.pending((h.source, h.seq)).unwrap().header;
        assert_eq!(pending.prev_waypoint, c);
        assert_eq!(pending.next_waypoint, f.tables[c.index()].lookup(&h.dest).unwrap());
        // A device in a, behind sender b, refuses.
        let mut at_a = NodeState::new(DeviceId(1), a, &f.params);
        assert_eq!(
            at_a.handle_receive(&f.ctx(), &f.header(b, a, e, e), 0.0, &mut rng),
            ForwardAction::Drop(DropReason::Backward)
        );
    }

    #[test]
    fn expired_budget_drops() {
        let f = Fixture::new(no_jitter());
        let (a, b, c, e) = (f.at(0.0, 0.0), f.at(50.0, 0.0), f.at(100.0, 0.0), f.at(200.0, 0.0));
        let mut node = NodeState::new(DeviceId(0), c, &f.params);
        let h = PacketHeader {
            hop_budget: 0,
            ..f.header(b, a, e, e)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(node.handle_receive(&f.ctx(), &h, 0.0, &mut rng), ForwardAction::Drop(DropReason::Expired));
    }

    #[test]
    fn overhear_rules() {
        let f = Fixture::new(no_jitter());
        let (a, b, c, d, e) = (
            f.at(0.0, 0.0),
            f.at(50.0, 0.0),
            f.at(100.0, 0.0),
            f.at(150.0, 0.0),
            f.at(200.0, 0.0),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let h = f.header(b, a, e, e);
        let key = (h.source, h.seq);
        for (copy_from, want) in [
            (a, ForwardAction::Drop(DropReason::Duplicate)),
            (d, ForwardAction::Suppress),
            (c, ForwardAction::Suppress),
        ] {
            let mut node = NodeState::new(DeviceId(0), c, &f.params);
            node.handle_receive(&f.ctx(), &h, 0.0, &mut rng);
            assert_eq!(node.handle_overhear(&f.ctx(), key, copy_from), want);
            if want == ForwardAction::Suppress {
                assert!(node.fire(key).is_none());
                assert_eq!(node.handle_receive(&f.ctx(), &h, 1.0, &mut rng), ForwardAction::Drop(DropReason::Duplicate));
            }
        }
    }

    #[test]
    fn copy_from_next_leg_replaces_stale_timer() {
        let f = Fixture::new(no_jitter());
        let (a, b, c, d, e) = (
            f.at(0.0, 0.0),
            f.at(50.0, 0.0),
            f.at(100.0, 0.0),
            f.at(150.0, 0.0),
            f.at(200.0, 0.0),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut node = NodeState::new(DeviceId(0), d, &f.params);
        // Timer aimed at waypoint c, heard from b.
        let h = f.header(b, a, c, e);
        assert!(matches!(node.handle_receive(&f.ctx(), &h, 0.0, &mut rng), ForwardAction::Schedule { .. }));
        // Waypoint c rebroadcasts with the next leg c -> e.
        let next = PacketHeader {
            sender: c,
            prev_waypoint: c,
            next_waypoint: e,
            ..h
        };
        assert!(matches!(node.handle_receive(&f.ctx(), &next, 30.0, &mut rng), ForwardAction::Schedule { .. }));
        let pending = node.pending((h.source, h.seq)).unwrap();
        assert_eq!((pending.header.prev_waypoint, pending.header.next_waypoint), (c, e));
        // A further copy of the same leg is an ordinary overhear.
        let same_leg = PacketHeader { sender: e, ..next };
        assert_eq!(node.handle_receive(&f.ctx(), &same_leg, 31.0, &mut rng), ForwardAction::Suppress);
        assert_eq!(node.handle_receive(&f.ctx(), &same_leg, 32.0, &mut rng), ForwardAction::Drop(DropReason::Duplicate));

        // Suppressed on the leg to c, then reached by the leg from c.
        let mut quiet = NodeState::new(DeviceId(1), d, &f.params);
        quiet.handle_receive(&f.ctx(), &h, 0.0, &mut rng);
        assert_eq!(quiet.handle_receive(&f.ctx(), &PacketHeader { sender: c, ..h }, 1.0, &mut rng), ForwardAction::Suppress);
        assert!(matches!(quiet.handle_receive(&f.ctx(), &next, 30.0, &mut rng), ForwardAction::Schedule { .. }));
        // Broadcasting ends the device's part for good.
        quiet.fire((h.source, h.seq)).unwrap();
        let later = PacketHeader { prev_waypoint: e, next_waypoint: a, ..next };
        assert_eq!(quiet.handle_receive(&f.ctx(), &later, 40.0, &mut rng), ForwardAction::Drop(DropReason::Duplicate));
    }

    #[test]
    fn flooding_mode_uses_jitter_only() {
        let f = Fixture::new(ProtocolParams {
            suppression: false,
            ..ProtocolParams::default()
        });
        let (a, b, e) = (f.at(0.0, 0.0), f.at(50.0, 0.0), f.at(200.0, 0.0));
        let mut node = NodeState::new(DeviceId(0), a, &f.params);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        match node.handle_receive(&f.ctx(), &f.header(b, a, e, e), 0.0, &mut rng) {
            ForwardAction::Schedule { delay_ms } => assert!((0.0..=2.0).contains(&delay_ms)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_cache_evicts_least_recent() {
        let mut c = DuplicateCache::new(2);
        c.insert((BuildingId(1), 1), Disposition::Broadcast);
        c.insert((BuildingId(1), 2), Disposition::Broadcast);
        assert!(c.get((BuildingId(1), 1)).is_some());
        c.insert((BuildingId(1), 3), Disposition::Suppressed(BuildingId(4)));
        assert!(c.get((BuildingId(1), 2)).is_none());
        assert!(c.get((BuildingId(1), 1)).is_some());
        assert_eq!(c.get((BuildingId(1), 3)), Some(Disposition::Suppressed(BuildingId(4))));
    }

    #[test]
    fn trace_line_format() {
        let r = TraceRecord {
            t_ms: 12.5,
            event: "rx",
            device: DeviceId(3),
            building: BuildingId(7),
            src: BuildingId(1),
            seq: 4,
            action: ForwardAction::Drop(DropReason::OutOfConduit).to_string(),
        };
        assert_eq!(r.to_string(), "12.500,rx,3,7,1,4,drop-out-of-conduit");
    }
}
