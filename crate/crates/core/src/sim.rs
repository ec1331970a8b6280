//! Monte-Carlo random walks along the street grid.
//!
//! Users move only along streets and through crossroad centers, so each pass
//! through a region is a straight line along a diameter of the crowded, WIT
//! and WET circles. Speed is piecewise constant along that line and every
//! dwell time is accumulated in closed form; there is no time step.
//!
//! Randomness comes from ChaCha8 seeded with the master seed, with the
//! user id selecting the stream, so traces are reproducible across platforms
//! and independent between users.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::{GridScenario, UserProfile};

pub const DEFAULT_BURN_IN: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    /// Transitions discarded before accounting starts.
    pub burn_in: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            burn_in: DEFAULT_BURN_IN,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkTrace {
    /// Region entries per site.
    pub visits: Vec<u64>,
    /// Passes that were neither the initial half pass nor clipped.
    pub complete_passes: Vec<u64>,
    pub time_in_region: Vec<f64>,
    pub time_in_wit: Vec<f64>,
    pub time_in_wet: Vec<f64>,
    pub elapsed: f64,
    pub transitions: u64,
    pub seed: u64,
}

impl WalkTrace {
    fn empty(n: usize, seed: u64) -> Self {
        WalkTrace {
            visits: vec![0; n],
            complete_passes: vec![0; n],
            time_in_region: vec![0.0; n],
            time_in_wit: vec![0.0; n],
            time_in_wet: vec![0.0; n],
            elapsed: 0.0,
            transitions: 0,
            seed,
        }
    }

    fn record(&mut self, pass: &Pass) {
        let k = pass.site;
        self.visits[k] += 1;
        if pass.complete {
            self.complete_passes[k] += 1;
        }
        self.time_in_region[k] += pass.region_time;
        self.time_in_wit[k] += pass.wit_time;
        self.time_in_wet[k] += pass.wet_time;
    }
}

/// One stay in a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pass {
    /// Flattened 0-based site.
    pub site: usize,
    pub region_time: f64,
    pub wit_time: f64,
    pub wet_time: f64,
    /// False for the initial half pass and for a pass cut by the horizon.
    pub complete: bool,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    duration: f64,
    wit: bool,
    wet: bool,
}

/// Half-pass segments of each region, ordered from the crossroad outward.
fn half_profiles(user: &UserProfile, grid: &GridScenario) -> Vec<Vec<Segment>> {
    let half = grid.street_length / 2.0;
    (0..grid.num_sites())
        .map(|k| {
            let rc = grid.crowded_range[k];
            let mut cuts = vec![0.0, half];
            for r in [rc, grid.wit_range, grid.wet_range] {
                if r > 0.0 && r < half {
                    cuts.push(r);
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.windows(2)
                .map(|w| {
                    let mid = 0.5 * (w[0] + w[1]);
                    let speed = if mid < rc { user.crowd_speed[k] } else { user.base_speed };
                    Segment {
                        duration: (w[1] - w[0]) / speed,
                        wit: mid < grid.wit_range,
                        wet: mid < grid.wet_range,
                    }
                })
                .collect()
        })
        .collect()
}

/// Iterator over the passes of one user's walk up to the horizon.
pub struct Walk<'a> {
    user: &'a UserProfile,
    grid: &'a GridScenario,
    profiles: Vec<Vec<Segment>>,
    rng: ChaCha8Rng,
    current: usize,
    time: f64,
    horizon: f64,
    started: bool,
    transitions: u64,
}

impl<'a> Walk<'a> {
    pub fn new(user: &'a UserProfile, grid: &'a GridScenario, horizon: f64, seed: u64, opts: SimOptions) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::validation("simulation horizon must be positive and finite"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(user.id as u64);
        let mut walk = Walk {
            user,
            grid,
            profiles: half_profiles(user, grid),
            current: 0,
            rng,
            time: 0.0,
            horizon,
            started: false,
            transitions: 0,
        };
        walk.current = walk.rng.gen_range(0..grid.num_sites());
        for _ in 0..opts.burn_in {
            walk.current = walk.next_site(walk.current);
        }
        Ok(walk)
    }

    pub fn transitions(&self) -> u64 {
        self.transitions
    }

    fn next_site(&mut self, from: usize) -> usize {
        let u: f64 = self.rng.gen();
        let mut acc = 0.0;
        let mut last = from;
        for (dir, nb) in self.grid.neighbor_indices(from) {
            acc += self.user.turn(from, dir);
            last = nb;
            if u < acc {
                return nb;
            }
        }
        // Rounding slack in the cumulative sum; isolated sites stay put.
        last
    }

    /// Adds segments to `pass` until the horizon; returns false if clipped.
    fn traverse(&mut self, pass: &mut Pass, outward: bool) -> bool {
        let profile = &self.profiles[pass.site];
        let order: Box<dyn Iterator<Item = &Segment>> = if outward {
            Box::new(profile.iter())
        } else {
            Box::new(profile.iter().rev())
        };
        for seg in order {
            let remaining = self.horizon - self.time;
            let (dt, clipped) = if seg.duration >= remaining {
                (remaining, true)
            } else {
                (seg.duration, false)
            };
            pass.region_time += dt;
            if seg.wit {
                pass.wit_time += dt;
            }
            if seg.wet {
                pass.wet_time += dt;
            }
            if clipped {
                self.time = self.horizon;
                return false;
            }
            self.time += dt;
        }
        true
    }
}

impl Iterator for Walk<'_> {
    type Item = Pass;

    fn next(&mut self) -> Option<Pass> {
        if self.time >= self.horizon {
            return None;
        }
        let mut pass = Pass {
            site: self.current,
            region_time: 0.0,
            wit_time: 0.0,
            wet_time: 0.0,
            complete: false,
        };
        let full = if self.started {
            self.traverse(&mut pass, false) && self.traverse(&mut pass, true)
        } else {
            // The walk starts at the crossroad center: first pass is half.
            self.started = true;
            self.traverse(&mut pass, true);
            false
        };
        pass.complete = full;
        if self.time < self.horizon {
            self.current = self.next_site(self.current);
            self.transitions += 1;
        }
        Some(pass)
    }
}

pub fn simulate(user: &UserProfile, grid: &GridScenario, horizon: f64, seed: u64) -> Result<WalkTrace> {
    simulate_with(user, grid, horizon, seed, SimOptions::default())
}

pub fn simulate_with(
    user: &UserProfile,
    grid: &GridScenario,
    horizon: f64,
    seed: u64,
    opts: SimOptions,
) -> Result<WalkTrace> {
    let mut walk = Walk::new(user, grid, horizon, seed, opts)?;
    let mut trace = WalkTrace::empty(grid.num_sites(), seed);
    for pass in walk.by_ref() {
        trace.record(&pass);
    }
    trace.elapsed = walk.time;
    trace.transitions = walk.transitions();
    Ok(trace)
}

/// Simulates every user in parallel; output order follows `users`.
pub fn simulate_population(
    users: &[UserProfile],
    grid: &GridScenario,
    horizon: f64,
    seed: u64,
    opts: SimOptions,
) -> Result<Vec<WalkTrace>> {
    users
        .par_iter()
        .map(|u| simulate_with(u, grid, horizon, seed, opts))
        .collect()
}

/// Empirical visit frequency (estimates the stationary vector) and time
/// occupancy (estimates the sojourn distribution).
pub fn empirical_distributions(trace: &WalkTrace) -> Result<(Vec<f64>, Vec<f64>)> {
    let total_visits: u64 = trace.visits.iter().sum();
    if total_visits == 0 || trace.elapsed <= 0.0 {
        return Err(Error::EmptyTrace);
    }
    let visit_freq = trace
        .visits
        .iter()
        .map(|&v| v as f64 / total_visits as f64)
        .collect();
    let occupied: f64 = trace.time_in_region.iter().sum();
    let occupancy = trace.time_in_region.iter().map(|t| t / occupied).collect();
    Ok((visit_freq, occupancy))
}
