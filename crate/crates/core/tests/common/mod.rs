#![allow(dead_code)]

use hap_core::scenario::{GeneratorConfig, Interval};
use hap_core::{PlanningInstance, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Randomized instance with the default physics, random turning, and a
/// battery capacity drawn so that the clamp binds for some users.
pub fn random_scenario(x_i: usize, x_j: usize, users: usize, seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut cfg = GeneratorConfig::standard(seed);
    cfg.x_i = x_i;
    cfg.x_j = x_j;
    cfg.users = users;
    cfg.budget = 1;
    cfg.crowded_range = Interval::new(5.0, 60.0);
    cfg.battery_capacity = rng.gen_range(0.2..3.0);
    cfg.generate().expect("generator produces valid scenarios")
}

pub fn random_instance(x_i: usize, x_j: usize, users: usize, seed: u64) -> PlanningInstance {
    PlanningInstance::build(&random_scenario(x_i, x_j, users, seed)).expect("random scenario is analyzable")
}

/// Unimodal with the maximum at `peak`: strictly rising up to it (within
/// `tol` relative) and non-increasing after it.
pub fn is_unimodal_at(values: &[f64], peak: usize, tol: f64) -> bool {
    let slack = |a: f64, b: f64| tol * a.abs().max(b.abs());
    let rising = values[..=peak].windows(2).all(|w| w[1] > w[0] - slack(w[0], w[1]));
    let falling = values[peak..].windows(2).all(|w| w[1] <= w[0] + slack(w[0], w[1]));
    rising && falling
}

pub fn is_non_increasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + tol * w[0].abs().max(1.0))
}

pub fn is_non_decreasing(values: &[f64], tol: f64) -> bool {
    values.windows(2).all(|w| w[1] >= w[0] - tol * w[0].abs().max(1.0))
}
