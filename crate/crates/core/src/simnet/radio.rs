use std::collections::HashMap;

use rand::Rng;

use super::loss::{loss_probability, LossModel};
use crate::mapdata::Point;
use crate::rng::{stream, Purpose};

/// Indices of points within `radius` of each point (excluding itself),
/// ascending, with their distances.
pub(crate) fn within(points: &[Point], radius: f64) -> Vec<Vec<(u32, f64)>> {
    let cell = |p: Point| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut buckets: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    for (i, &p) in points.iter().enumerate() {
        buckets.entry(cell(p)).or_default().push(i as u32);
    }
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let (cx, cy) = cell(p);
            let mut out = Vec::new();
            for dx in -1..=1 {
                for dy in -1..=1 {
                    let Some(b) = buckets.get(&(cx + dx, cy + dy)) else {
                        continue;
                    };
                    for &j in b {
                        if j as usize == i {
                            continue;
                        }
                        let d = p.dist(points[j as usize]);
                        if d <= radius {
                            out.push((j, d));
                        }
                    }
                }
            }
            out.sort_by_key(|&(j, _)| j);
            out
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub to: u32,
    pub dist: f64,
    /// Stochastic loss rate of this directed link.
    pub rate: f64,
}

/// Every directed link with a nonzero chance of reception.
#[derive(Debug, Clone)]
pub struct Radio {
    pub loss: LossModel,
    links: Vec<Vec<Link>>,
}

impl Radio {
    pub fn new(positions: &[Point], loss: LossModel, seed: u64) -> Self {
        let links = within(positions, loss.cliff_end)
            .into_iter()
            .enumerate()
            .map(|(u, nb)| {
                let mut rng = stream(seed, Purpose::LinkRate, u as u64);
                nb.into_iter()
                    .filter(|&(_, d)| d < loss.cliff_end)
                    .map(|(to, dist)| Link {
                        to,
                        dist,
                        rate: rng.random::<f64>() * loss.ell,
                    })
                    .collect()
            })
            .collect();
        Self { loss, links }
    }

    pub fn links(&self, u: u32) -> &[Link] {
        &self.links[u as usize]
    }

    pub fn link(&self, u: u32, v: u32) -> Option<&Link> {
        let l = &self.links[u as usize];
        l.binary_search_by_key(&v, |x| x.to).ok().map(|i| &l[i])
    }

    /// Samples one transmission over `link`.
    pub fn received<R: Rng>(&self, link: &Link, rng: &mut R) -> bool {
        let r = if self.loss.per_packet_rates {
            rng.random::<f64>() * self.loss.ell
        } else {
            link.rate
        };
        let p = loss_probability(&self.loss, link.dist, r);
        p < 1.0 && rng.random::<f64>() >= p
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn within_matches_brute_force() {
        let mut rng = stream(3, Purpose::Synthetic, 0);
        let pts: Vec<Point> = (0..300)
            .map(|_| Point::new(rng.random_range(0.0..500.0), rng.random_range(0.0..500.0)))
            .collect();
        let fast = within(&pts, 80.0);
        for (i, p) in pts.iter().enumerate() {
            let slow: Vec<u32> = (0..pts.len() as u32)
                .filter(|&j| j as usize != i && p.dist(pts[j as usize]) <= 80.0)
                .collect();
            let got: Vec<u32> = fast[i].iter().map(|x| x.0).collect();
            assert_eq!(got, slow);
        }
    }

    #[test]
    fn link_rates_bounded_and_directed() {
        let pts = [Point::new(0.0, 0.0), Point::new(30.0, 0.0), Point::new(90.0, 0.0)];
        let radio = Radio::new(&pts, LossModel::with_ell(0.4), 9);
        let ab = radio.link(0, 1).unwrap();
        let ba = radio.link(1, 0).unwrap();
        assert!(ab.rate <= 0.4 && ba.rate <= 0.4);
        assert_ne!(ab.rate, ba.rate);
        assert!(radio.link(0, 2).is_none());
        assert_eq!(radio.links(1).len(), 2);
    }
}
