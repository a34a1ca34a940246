use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand_chacha::ChaCha8Rng;

use super::radio::Radio;
use super::{pick_pairs, PacketOutcome, Pair, Scheme, SimError, SimMetrics, SimScenario};
use crate::mapdata::DeviceId;
use crate::protocol::{ForwardAction, NodeState, PacketHeader, PacketKey, ProtocolContext, TraceRecord};
use crate::rng::{stream, Purpose};

/// Propagation plus processing time of one broadcast.
pub const PROPAGATION_MS: f64 = 1.0;

enum Kind {
    Inject,
    Receive { dev: u32, header: PacketHeader },
    Fire { dev: u32, key: PacketKey },
}

struct Event {
    t: f64,
    ord: u64,
    pkt: usize,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Reversed so the max-heap pops the earliest event.
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.ord.cmp(&self.ord))
    }
}

struct Packet {
    pair: Pair,
    start: f64,
    delivery: ChaCha8Rng,
    jitter: ChaCha8Rng,
    outcome: PacketOutcome,
}

struct Sim<'a> {
    s: &'a SimScenario<'a>,
    ctx: ProtocolContext<'a>,
    radio: Radio,
    nodes: Vec<NodeState>,
    packets: Vec<Packet>,
    queue: BinaryHeap<Event>,
    ord: u64,
    trace: Option<Vec<TraceRecord>>,
}

impl Sim<'_> {
    fn push(&mut self, t: f64, pkt: usize, kind: Kind) {
        self.ord += 1;
        self.queue.push(Event {
            t,
            ord: self.ord,
            pkt,
            kind,
        });
    }

    fn log(&mut self, t_ms: f64, event: &'static str, dev: u32, h: &PacketHeader, action: String) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceRecord {
                t_ms,
                event,
                device: DeviceId(dev),
                building: self.nodes[dev as usize].building,
                src: h.source,
                seq: h.seq,
                action,
            });
        }
    }

    fn broadcast(&mut self, t: f64, pkt: usize, from: u32, h: PacketHeader) {
        self.packets[pkt].outcome.transmissions += 1;
        let mut heard = Vec::new();
        for link in self.radio.links(from) {
            if self.radio.received(link, &mut self.packets[pkt].delivery) {
                heard.push(link.to);
            }
        }
        for dev in heard {
            self.push(t + PROPAGATION_MS, pkt, Kind::Receive { dev, header: h });
        }
    }

    fn step(&mut self, e: Event) {
        let pkt = e.pkt;
        if e.t - self.packets[pkt].start > self.s.wall_ms {
            return;
        }
        match e.kind {
            Kind::Inject => {
                let src = self.packets[pkt].pair.src;
                let dest_building = self.packets[pkt].outcome.dest_building;
                let Ok(dest) = self.ctx.grid.address_of(dest_building) else {
                    return;
                };
                let ctx = self.ctx;
                let origin = self.nodes[src.index()].originate(&ctx, dest, pkt as u32);
                match origin {
                    Some(h) => {
                        self.log(e.t, "tx", src.0, &h, "originate".into());
                        self.broadcast(e.t, pkt, src.0, h);
                    }
                    None => {
                        let b = self.nodes[src.index()].building;
                        if let Some(trace) = &mut self.trace {
                            trace.push(TraceRecord {
                                t_ms: e.t,
                                event: "tx",
                                device: src,
                                building: b,
                                src: b,
                                seq: pkt as u32,
                                action: "unreachable".into(),
                            });
                        }
                    }
                }
            }
            Kind::Receive { dev, header } => {
                let ctx = self.ctx;
                let action = self.nodes[dev as usize].handle_receive(&ctx, &header, e.t, &mut self.packets[pkt].jitter);
                self.log(e.t, "rx", dev, &header, action.to_string());
                match action {
                    ForwardAction::Deliver => {
                        let budget = self.s.protocol.hop_budget;
                        let p = &mut self.packets[pkt];
                        if !p.outcome.delivered {
                            p.outcome.delivered = true;
                            p.outcome.hops = (budget - header.hop_budget) as u32 + 1;
                            p.outcome.latency_ms = e.t - p.start;
                        }
                    }
                    ForwardAction::Schedule { delay_ms } => {
                        let key = (header.source, header.seq);
                        self.push(e.t + delay_ms, pkt, Kind::Fire { dev, key });
                    }
                    ForwardAction::Drop(_) | ForwardAction::Suppress => {}
                }
            }
            Kind::Fire { dev, key } => match self.nodes[dev as usize].fire(key) {
                Some(h) => {
                    self.log(e.t, "tx", dev, &h, "broadcast".into());
                    self.broadcast(e.t, pkt, dev, h);
                }
                None => {
                    if let Some(trace) = &mut self.trace {
                        trace.push(TraceRecord {
                            t_ms: e.t,
                            event: "timer",
                            device: DeviceId(dev),
                            building: self.nodes[dev as usize].building,
                            src: key.0,
                            seq: key.1,
                            action: "cancelled".into(),
                        });
                    }
                }
            },
        }
    }
}

/// Runs the given pairs, one packet each, injected `packet_interval_ms`
/// apart.
pub fn simulate_pairs(
    s: &SimScenario,
    pairs: &[Pair],
    traced: bool,
) -> Result<(SimMetrics, Vec<TraceRecord>), SimError> {
    if s.scheme != Scheme::MapMesh {
        return Err(SimError::WrongScheme(s.scheme));
    }
    let tables = s.tables.ok_or(SimError::MissingTables)?;
    let w = s.world;
    if tables.len() != w.map.len() {
        return Err(SimError::MissingTables);
    }
    let devices = s.devices.devices();
    let positions: Vec<_> = devices.iter().map(|d| d.position).collect();
    let mut sim = Sim {
        s,
        ctx: ProtocolContext {
            graph: &w.graph,
            map: &w.map,
            grid: &w.grid,
            tables,
            params: &s.protocol,
        },
        radio: Radio::new(&positions, s.loss, s.seed),
        nodes: devices.iter().map(|d| NodeState::new(d.id, d.building_id, &s.protocol)).collect(),
        packets: Vec::with_capacity(pairs.len()),
        queue: BinaryHeap::new(),
        ord: 0,
        trace: traced.then(Vec::new),
    };
    for (i, &pair) in pairs.iter().enumerate() {
        let start = i as f64 * s.packet_interval_ms;
        sim.packets.push(Packet {
            pair,
            start,
            delivery: stream(s.seed, Purpose::Delivery, i as u64),
            jitter: stream(s.seed, Purpose::Jitter, i as u64),
            outcome: PacketOutcome {
                src: pair.src,
                dst: pair.dst,
                dest_building: s.devices.device(pair.dst).building_id,
                delivered: false,
                hops: 0,
                latency_ms: 0.0,
                transmissions: 0,
            },
        });
        sim.push(start, i, Kind::Inject);
    }
    while let Some(e) = sim.queue.pop() {
        sim.step(e);
    }
    let outcomes = sim.packets.into_iter().map(|p| p.outcome).collect();
    Ok((SimMetrics::from_packets(Scheme::MapMesh, outcomes), sim.trace.unwrap_or_default()))
}

pub fn run_simulation(s: &SimScenario) -> Result<SimMetrics, SimError> {
    let pairs = pick_pairs(s.devices, s.pairs, s.seed)?;
    Ok(simulate_pairs(s, &pairs, false)?.0)
}

pub fn run_simulation_traced(s: &SimScenario) -> Result<(SimMetrics, Vec<TraceRecord>), SimError> {
    let pairs = pick_pairs(s.devices, s.pairs, s.seed)?;
    simulate_pairs(s, &pairs, true)
}
