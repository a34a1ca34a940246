use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossModel {
    pub cliff_start: f64,
    pub cliff_end: f64,
    /// Upper bound of the uniform stochastic link loss rate.
    pub ell: f64,
    /// Draw the stochastic rate afresh for every transmission instead of
    /// once per directed link.
    pub per_packet_rates: bool,
}

impl Default for LossModel {
    fn default() -> Self {
        Self {
            cliff_start: 70.0,
            cliff_end: 80.0,
            ell: 0.0,
            per_packet_rates: false,
        }
    }
}

impl LossModel {
    pub fn with_ell(ell: f64) -> Self {
        Self {
            ell,
            ..Self::default()
        }
    }

    /// Distance component: 0 up to `cliff_start`, 1 from `cliff_end`, linear
    /// in between.
    pub fn distance_loss(&self, d: f64) -> f64 {
        if d <= self.cliff_start {
            0.0
        } else if d >= self.cliff_end {
            1.0
        } else {
            (d - self.cliff_start) / (self.cliff_end - self.cliff_start)
        }
    }
}

/// Drop probability of one transmission over `d` meters on a link with
/// stochastic rate `r`.
pub fn loss_probability(m: &LossModel, d: f64, r: f64) -> f64 {
    1.0 - (1.0 - m.distance_loss(d)) * (1.0 - r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_examples() {
        let m = LossModel::with_ell(0.4);
        assert_eq!(loss_probability(&m, 50.0, 0.0), 0.0);
        assert_eq!(loss_probability(&m, 85.0, 0.0), 1.0);
        assert_eq!(loss_probability(&m, 85.0, 0.3), 1.0);
        assert!((loss_probability(&m, 75.0, 0.2) - 0.6).abs() < 1e-12);
        assert_eq!(loss_probability(&m, 70.0, 0.25), 0.25);
        assert_eq!(loss_probability(&m, 80.0, 0.0), 1.0);
    }

    #[test]
    fn distance_loss_is_monotone() {
        let m = LossModel::default();
        let mut last = 0.0;
        for i in 0..200 {
            let p = m.distance_loss(i as f64 * 0.5);
            assert!(p >= last && (0.0..=1.0).contains(&p));
            last = p;
        }
    }
}
