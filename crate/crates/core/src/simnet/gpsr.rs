use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::radio::{within, Radio};
use super::{pick_pairs, PacketOutcome, Pair, Scheme, SimError, SimMetrics, SimScenario};
use crate::mapdata::geometry::segment_intersection;
use crate::mapdata::{DeviceId, Point};
use crate::protocol::TraceRecord;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GpsrParams {
    /// Link-layer retransmissions after the first attempt of a hop.
    pub retransmits: u32,
    pub ttl: u32,
}

impl Default for GpsrParams {
    fn default() -> Self {
        Self {
            retransmits: 8,
            ttl: 4096,
        }
    }
}

/// Gabriel-graph subset of `neighbors`: `v` stays a neighbor of `u` unless
/// some other neighbor of `u` lies strictly inside the circle with diameter
/// `uv`.
pub fn gabriel_neighbors(points: &[Point], neighbors: &[Vec<u32>]) -> Vec<Vec<u32>> {
    neighbors
        .iter()
        .enumerate()
        .map(|(u, nb)| {
            let pu = points[u];
            nb.iter()
                .copied()
                .filter(|&v| {
                    let pv = points[v as usize];
                    let m = pu.midpoint(pv);
                    let r2 = pu.dist_sq(pv) / 4.0;
                    !nb.iter().any(|&w| w != v && points[w as usize].dist_sq(m) < r2)
                })
                .collect()
        })
        .collect()
}

/// Forwarding view of a device set: positions as the devices believe them,
/// neighbors by believed distance, and the planarized neighbor lists.
#[derive(Debug, Clone)]
pub struct GpsrNet {
    pub perceived: Vec<Point>,
    pub neighbors: Vec<Vec<u32>>,
    pub planar: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GpsrRoute {
    pub delivered: bool,
    /// Devices visited, starting at the source.
    pub path: Vec<u32>,
    pub transmissions: u64,
}

impl GpsrRoute {
    pub fn hops(&self) -> u32 {
        self.path.len() as u32 - 1
    }
}

#[derive(Clone, Copy)]
struct Perimeter {
    lp: Point,
    lf: Point,
    first_edge: (u32, u32),
}

fn angle(from: Point, to: Point) -> f64 {
    (to.y - from.y).atan2(to.x - from.x)
}

impl GpsrNet {
    pub fn new(perceived: Vec<Point>, range: f64) -> Self {
        let neighbors: Vec<Vec<u32>> = within(&perceived, range)
            .into_iter()
            .map(|nb| nb.into_iter().map(|(v, _)| v).collect())
            .collect();
        let planar = gabriel_neighbors(&perceived, &neighbors);
        Self {
            perceived,
            neighbors,
            planar,
        }
    }

    fn pos(&self, v: u32) -> Point {
        self.perceived[v as usize]
    }

    fn greedy(&self, cur: u32, dest: Point) -> Option<u32> {
        let here = self.pos(cur).dist_sq(dest);
        self.neighbors[cur as usize]
            .iter()
            .map(|&v| (self.pos(v).dist_sq(dest), v))
            .filter(|&(d, _)| d < here)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, v)| v)
    }

    /// First planar neighbor counterclockwise about `cur` from direction
    /// `reference`; the neighbor lying on `reference` itself comes last.
    fn ccw(&self, cur: u32, reference: f64) -> Option<u32> {
        let p = self.pos(cur);
        self.planar[cur as usize]
            .iter()
            .map(|&v| {
                let mut d = (angle(p, self.pos(v)) - reference).rem_euclid(TAU);
                if d <= 1e-12 {
                    d = TAU;
                }
                (d, v)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, v)| v)
    }

    /// Face change: while edge `cur -> next` crosses `lp -> dest` closer to
    /// the destination than `lf`, move to the next edge about `cur`.
    fn change_faces(&self, cur: u32, mut next: u32, dest: Point, st: &mut Perimeter) -> (u32, bool) {
        let mut changed = false;
        for _ in 0..self.planar[cur as usize].len() {
            let Some(x) = segment_intersection(self.pos(cur), self.pos(next), st.lp, dest) else {
                break;
            };
            if x.dist(dest) + 1e-9 >= st.lf.dist(dest) {
                break;
            }
            st.lf = x;
            changed = true;
            match self.ccw(cur, angle(self.pos(cur), self.pos(next))) {
                Some(v) => next = v,
                None => break,
            }
        }
        (next, changed)
    }

    /// Greedy forwarding toward `dest`, switching to right-hand-rule
    /// perimeter traversal of the planar graph at local minima. `send(u, v)`
    /// performs one hop and returns whether it arrived and the number of
    /// transmissions it took.
    pub fn route(
        &self,
        src: u32,
        dest: Point,
        arrived: impl Fn(u32) -> bool,
        ttl: u32,
        mut send: impl FnMut(u32, u32) -> (bool, u32),
    ) -> GpsrRoute {
        let mut r = GpsrRoute {
            delivered: false,
            path: vec![src],
            transmissions: 0,
        };
        let mut cur = src;
        let mut prev = src;
        let mut perimeter: Option<Perimeter> = None;
        loop {
            if arrived(cur) {
                r.delivered = true;
                return r;
            }
            if r.hops() >= ttl {
                return r;
            }
            if let Some(st) = perimeter {
                if self.pos(cur).dist(dest) < st.lp.dist(dest) {
                    perimeter = None;
                }
            }
            let next = match perimeter.as_mut() {
                None => match self.greedy(cur, dest) {
                    Some(v) => Some(v),
                    None => {
                        let p = self.pos(cur);
                        let mut st = Perimeter {
                            lp: p,
                            lf: p,
                            first_edge: (cur, cur),
                        };
                        let next = self.ccw(cur, angle(p, dest)).map(|v| {
                            let (v, _) = self.change_faces(cur, v, dest, &mut st);
                            st.first_edge = (cur, v);
                            v
                        });
                        perimeter = Some(st);
                        next
                    }
                },
                Some(st) => match self.ccw(cur, angle(self.pos(cur), self.pos(prev))) {
                    None => None,
                    Some(v) => {
                        let (v, changed) = self.change_faces(cur, v, dest, st);
                        if changed {
                            st.first_edge = (cur, v);
                            Some(v)
                        } else if (cur, v) == st.first_edge {
                            // Went around the whole face: no way on.
                            None
                        } else {
                            Some(v)
                        }
                    }
                },
            };
            let Some(next) = next else {
                return r;
            };
            let (ok, attempts) = send(cur, next);
            r.transmissions += attempts as u64;
            if !ok {
                return r;
            }
            prev = cur;
            cur = next;
            r.path.push(cur);
        }
    }
}

fn simulate(s: &SimScenario, pairs: &[Pair], traced: bool) -> Result<(SimMetrics, Vec<TraceRecord>), SimError> {
    let Scheme::Gpsr { location_error } = s.scheme else {
        return Err(SimError::WrongScheme(s.scheme));
    };
    let devices = s.devices.devices();
    let truth: Vec<Point> = devices.iter().map(|d| d.position).collect();
    let perceived = devices
        .iter()
        .map(|d| {
            if location_error == 0.0 {
                return d.position;
            }
            let mut rng = stream(s.seed, Purpose::LocationError, d.id.0 as u64);
            let dx = rng.random_range(-location_error..=location_error);
            let dy = rng.random_range(-location_error..=location_error);
            Point::new(d.position.x + dx, d.position.y + dy)
        })
        .collect();
    let net = GpsrNet::new(perceived, s.loss.cliff_start);
    let radio = Radio::new(&truth, s.loss, s.seed);
    let attempts = s.gpsr.retransmits + 1;
    let mut trace = Vec::new();
    let mut outcomes = Vec::with_capacity(pairs.len());
    for (i, pair) in pairs.iter().enumerate() {
        let start = i as f64 * s.packet_interval_ms;
        let dest_building = s.devices.device(pair.dst).building_id;
        let src_building = s.devices.device(pair.src).building_id;
        let mut rng = stream(s.seed, Purpose::Delivery, i as u64);
        let mut clock = start;
        let route = net.route(
            pair.src.0,
            net.pos(pair.dst.0),
            |v| devices[v as usize].building_id == dest_building,
            s.gpsr.ttl,
            |u, v| {
                for a in 1..=attempts {
                    let ok = radio.link(u, v).is_some_and(|l| radio.received(l, &mut rng));
                    clock += super::mapmesh::PROPAGATION_MS;
                    if traced {
                        trace.push(TraceRecord {
                            t_ms: clock - super::mapmesh::PROPAGATION_MS,
                            event: "tx",
                            device: DeviceId(u),
                            building: devices[u as usize].building_id,
                            src: src_building,
                            seq: i as u32,
                            action: format!("unicast-{v}"),
                        });
                        trace.push(TraceRecord {
                            t_ms: clock,
                            event: "rx",
                            device: DeviceId(v),
                            building: devices[v as usize].building_id,
                            src: src_building,
                            seq: i as u32,
                            action: if ok { "received" } else { "lost" }.into(),
                        });
                    }
                    if ok {
                        return (true, a);
                    }
                }
                (false, attempts)
            },
        );
        outcomes.push(PacketOutcome {
            src: pair.src,
            dst: pair.dst,
            dest_building,
            delivered: route.delivered,
            hops: if route.delivered { route.hops() } else { 0 },
            latency_ms: if route.delivered { clock - start } else { 0.0 },
            transmissions: route.transmissions,
        });
    }
    Ok((SimMetrics::from_packets(s.scheme, outcomes), trace))
}

pub fn simulate_gpsr_pairs(
    s: &SimScenario,
    pairs: &[Pair],
    traced: bool,
) -> Result<(SimMetrics, Vec<TraceRecord>), SimError> {
    simulate(s, pairs, traced)
}

pub fn run_gpsr(s: &SimScenario) -> Result<SimMetrics, SimError> {
    let pairs = pick_pairs(s.devices, s.pairs, s.seed)?;
    Ok(simulate(s, &pairs, false)?.0)
}

pub fn run_gpsr_traced(s: &SimScenario) -> Result<(SimMetrics, Vec<TraceRecord>), SimError> {
    let pairs = pick_pairs(s.devices, s.pairs, s.seed)?;
    simulate(s, &pairs, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(points: &[(f64, f64)]) -> GpsrNet {
        GpsrNet::new(points.iter().map(|&(x, y)| Point::new(x, y)).collect(), 70.0)
    }

    fn lossless(_: u32, _: u32) -> (bool, u32) {
        (true, 1)
    }

    #[test]
    fn direct_neighbor_is_one_hop() {
        let net = exact(&[(0.0, 0.0), (50.0, 0.0)]);
        let r = net.route(0, net.pos(1), |v| v == 1, 4096, lossless);
        assert!(r.delivered);
        assert_eq!(r.hops(), 1);
        assert_eq!(r.transmissions, 1);
    }

    #[test]
    fn perimeter_mode_routes_around_a_void() {
        // Source at the bottom of a U, destination across the gap above it.
        let pts = [
            (0.0, 0.0),
            (-60.0, 0.0),
            (-120.0, 0.0),
            (-120.0, 60.0),
            (-120.0, 120.0),
            (-120.0, 180.0),
            (-60.0, 200.0),
            (0.0, 200.0),
            (60.0, 0.0),
            (120.0, 0.0),
            (120.0, 60.0),
            (120.0, 120.0),
            (120.0, 180.0),
            (60.0, 200.0),
        ];
        let net = exact(&pts);
        assert_eq!(net.greedy(0, net.pos(7)), None);
        let r = net.route(0, net.pos(7), |v| v == 7, 4096, lossless);
        assert!(r.delivered);
        assert_eq!(r.path, vec![0, 1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn disconnected_destination_ends_the_walk() {
        let net = exact(&[(0.0, 0.0), (60.0, 0.0), (0.0, 60.0), (500.0, 0.0)]);
        let r = net.route(0, net.pos(3), |v| v == 3, 4096, lossless);
        assert!(!r.delivered);
        assert!(r.hops() < 10, "{:?}", r.path);
    }

    #[test]
    fn ttl_exhaustion_on_a_ring() {
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let a = i as f64 * TAU / 12.0;
                (100.0 * a.cos(), 100.0 * a.sin())
            })
            .collect();
        let net = exact(&pts);
        let short = net.route(0, net.pos(6), |v| v == 6, 4, lossless);
        assert!(!short.delivered);
        assert_eq!(short.hops(), 4);
        let long = net.route(0, net.pos(6), |v| v == 6, 4096, lossless);
        assert!(long.delivered);
        assert_eq!(long.hops(), 6);
    }

    #[test]
    fn failed_hop_spends_every_attempt() {
        let net = exact(&[(0.0, 0.0), (50.0, 0.0), (100.0, 0.0)]);
        let r = net.route(0, net.pos(2), |v| v == 2, 4096, |_, _| (false, 9));
        assert!(!r.delivered);
        assert_eq!(r.transmissions, 9);
        assert_eq!(r.path, vec![0]);
    }

    #[test]
    fn gabriel_drops_the_long_triangle_edge() {
        let pts = [Point::new(0.0, 0.0), Point::new(60.0, 0.0), Point::new(30.0, 5.0)];
        let nb = vec![vec![1, 2], vec![0, 2], vec![0, 1]];
        let g = gabriel_neighbors(&pts, &nb);
        assert_eq!(g, vec![vec![2], vec![2], vec![0, 1]]);
    }
}
