use std::io::{self, Write};

use serde::Serialize;

use super::pairs_within;
use crate::mapdata::{devices_for_area, BuildingMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityRow {
    pub range_m: f64,
    pub components: usize,
    /// Share of devices (at the sweep's density) in the largest component.
    pub largest_fraction: f64,
}

struct Dsu {
    parent: Vec<u32>,
    weight: Vec<u64>,
}

impl Dsu {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let p = self.parent[x as usize];
            self.parent[x as usize] = self.parent[p as usize];
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> Option<u64> {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return None;
        }
        if self.weight[a as usize] < self.weight[b as usize] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b as usize] = a;
        self.weight[a as usize] += self.weight[b as usize];
        Some(self.weight[a as usize])
    }
}

/// Connectivity as a function of radio range. Pairs are computed once at the
/// largest range and merged in distance order.
pub fn feasibility_sweep(map: &BuildingMap, ranges: &[f64], density: f64) -> Vec<FeasibilityRow> {
    assert!(!ranges.is_empty(), "at least one range is required");
    assert!(
        ranges.windows(2).all(|w| w[0] <= w[1]),
        "ranges must be ascending"
    );
    let n = map.len();
    let weights: Vec<u64> = map
        .buildings()
        .iter()
        .map(|b| devices_for_area(b.area, density) as u64)
        .collect();
    let total: u64 = weights.iter().sum::<u64>().max(1);
    let mut dsu = Dsu {
        parent: (0..n as u32).collect(),
        weight: weights.clone(),
    };
    let mut components = n;
    let mut largest = weights.iter().copied().max().unwrap_or(0);

    let max_range = *ranges.last().unwrap();
    let mut pairs = if max_range > 0.0 {
        pairs_within(map, max_range)
    } else {
        Vec::new()
    };
    pairs.sort_by(|a, b| a.2.total_cmp(&b.2));
    let mut next = 0;
    ranges
        .iter()
        .map(|&range| {
            while next < pairs.len() && pairs[next].2 <= range {
                let (u, v, _) = pairs[next];
                if let Some(w) = dsu.union(u, v) {
                    components -= 1;
                    largest = largest.max(w);
                }
                next += 1;
            }
            FeasibilityRow {
                range_m: range,
                components,
                largest_fraction: largest as f64 / total as f64,
            }
        })
        .collect()
}

/// CSV `range_m,components,largest_fraction`.
pub fn write_feasibility_csv<W: Write>(rows: &[FeasibilityRow], mut out: W) -> io::Result<()> {
    writeln!(out, "range_m,components,largest_fraction")?;
    for r in rows {
        writeln!(out, "{},{},{:.6}", r.range_m, r.components, r.largest_fraction)?;
    }
    Ok(())
}
