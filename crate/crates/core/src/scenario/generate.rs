//! Seeded random scenarios.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{uniform_turns, GridScenario, PathLossModel, Scenario, UserProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    fn sample(&self, rng: &mut impl Rng) -> f64 {
        if self.hi > self.lo {
            rng.gen_range(self.lo..self.hi)
        } else {
            self.lo
        }
    }
}

/// Recipe for a randomized scenario. The same config and seed always yield
/// the same scenario (ChaCha8 stream seeded from `seed`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub x_i: usize,
    pub x_j: usize,
    pub users: usize,
    pub street_length: f64,
    pub wit_range: f64,
    pub wet_range: f64,
    pub crowded_range: Interval,
    pub base_speed: Interval,
    /// Crowd speed as a fraction of the user's base speed.
    pub crowd_speed_ratio: Interval,
    /// Draw turn probabilities at random; otherwise uniform over neighbors.
    pub random_turns: bool,
    pub tx_power: f64,
    pub rectify_eff: f64,
    pub path_loss: PathLossModel,
    pub battery_capacity: f64,
    pub observation_time: f64,
    pub alpha: f64,
    pub budget: usize,
    pub download_rate: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    /// 5x5 city with 100 users and the published parameter table. The
    /// path-loss exponent is not published; 3 is used.
    pub fn standard(seed: u64) -> Self {
        GeneratorConfig {
            x_i: 5,
            x_j: 5,
            users: 100,
            street_length: 200.0,
            wit_range: 50.0,
            wet_range: 10.0,
            crowded_range: Interval::new(5.0, 60.0),
            base_speed: Interval::new(1.0, 2.0),
            crowd_speed_ratio: Interval::new(0.3, 0.8),
            random_turns: true,
            tx_power: 1.0,
            rectify_eff: 0.8,
            path_loss: PathLossModel {
                ref_distance: 1.0,
                ref_loss: 0.003,
                exponent: 3.0,
            },
            battery_capacity: 1.0,
            observation_time: 10.0 * 3600.0,
            alpha: 0.97,
            budget: 8,
            download_rate: 1e6,
            seed,
        }
    }

    pub fn generate(&self) -> Result<Scenario> {
        if self.crowded_range.lo < 0.0 || self.crowded_range.hi < self.crowded_range.lo {
            return Err(Error::validation("crowded range interval is empty or negative"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.x_i * self.x_j;
        let crowded_range = (0..n).map(|_| self.crowded_range.sample(&mut rng)).collect();
        let grid = GridScenario {
            x_i: self.x_i,
            x_j: self.x_j,
            street_length: self.street_length,
            wit_range: self.wit_range,
            wet_range: self.wet_range,
            crowded_range,
            tx_power: self.tx_power,
            rectify_eff: self.rectify_eff,
            battery_capacity: self.battery_capacity,
            observation_time: self.observation_time,
            alpha: self.alpha,
            budget: self.budget,
            download_rate: self.download_rate,
            path_loss: self.path_loss,
        };
        grid.validate()?;

        let users = (1..=self.users)
            .map(|id| {
                let base_speed = self.base_speed.sample(&mut rng);
                let crowd_speed = (0..n)
                    .map(|_| base_speed * self.crowd_speed_ratio.sample(&mut rng))
                    .collect();
                let turn_prob = (0..n)
                    .map(|idx| {
                        if self.random_turns {
                            random_turns(&grid, idx, &mut rng)
                        } else {
                            uniform_turns(&grid, idx)
                        }
                    })
                    .collect();
                UserProfile {
                    id,
                    base_speed,
                    crowd_speed,
                    turn_prob,
                }
            })
            .collect();
        Scenario::new(grid, users)
    }
}

fn random_turns(grid: &GridScenario, idx: usize, rng: &mut impl Rng) -> [f64; 4] {
    let mut row = [0.0; 4];
    let dirs: Vec<_> = grid.neighbor_indices(idx).map(|(d, _)| d).collect();
    let weights: Vec<f64> = dirs.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    for (d, w) in dirs.iter().zip(&weights) {
        row[d.slot()] = w / total;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_defaults() {
        let s = GeneratorConfig::standard(2019).generate().unwrap();
        let g = &s.grid;
        assert_eq!(s.num_users(), 100);
        assert_eq!((g.x_i, g.x_j, g.budget), (5, 5, 8));
        assert_eq!(g.street_length, 200.0);
        assert_eq!((g.wit_range, g.wet_range), (50.0, 10.0));
        assert_eq!((g.battery_capacity, g.alpha, g.tx_power), (1.0, 0.97, 1.0));
        assert_eq!((g.path_loss.ref_distance, g.path_loss.ref_loss), (1.0, 0.003));
        assert_eq!(g.observation_time, 36_000.0);
        assert!(g.crowded_range.iter().all(|&r| (5.0..=60.0).contains(&r)));
    }

    #[test]
    fn generation_is_reproducible() {
        let a = GeneratorConfig::standard(5).generate().unwrap();
        let b = GeneratorConfig::standard(5).generate().unwrap();
        let c = GeneratorConfig::standard(6).generate().unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
