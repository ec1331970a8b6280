//! City grid, candidate sites, radio constants and the user population.
//!
//! Crossroads are addressed by 1-based `(i, j)` coordinates ([`Site`]) at the
//! API surface and by a 0-based row-major index internally. All quantities are
//! SI: meters, seconds, watts, joules.

mod file;
mod generate;

pub use file::{load_scenario, parse_scenario, ScenarioFile};
pub use generate::{GeneratorConfig, Interval};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the sum of a crossroad's outgoing turn probabilities.
pub const TURN_SUM_TOL: f64 = 1e-12;

/// A crossroad `s_{i,j}`, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub i: usize,
    pub j: usize,
}

impl Site {
    pub const fn new(i: usize, j: usize) -> Self {
        Site { i, j }
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.i, self.j)
    }
}

/// Street leaving a crossroad.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub const fn slot(self) -> usize {
        match self {
            Direction::Up => 0,
            Direction::Down => 1,
            Direction::Left => 2,
            Direction::Right => 3,
        }
    }
}

/// Distance-dependent attenuation `h0 (d0/d)^beta`, flat inside `d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub ref_distance: f64,
    pub ref_loss: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScenario {
    pub x_i: usize,
    pub x_j: usize,
    pub street_length: f64,
    pub wit_range: f64,
    pub wet_range: f64,
    /// Crowded radius per crossroad, row-major.
    pub crowded_range: Vec<f64>,
    pub tx_power: f64,
    pub rectify_eff: f64,
    pub battery_capacity: f64,
    pub observation_time: f64,
    pub alpha: f64,
    pub budget: usize,
    /// Constant download rate. It cancels out of the WIT efficiency and is
    /// carried only so scenario files round-trip.
    pub download_rate: f64,
    pub path_loss: PathLossModel,
}

impl GridScenario {
    /// Number of candidate sites `N = X_I * X_J`.
    pub fn num_sites(&self) -> usize {
        self.x_i * self.x_j
    }

    pub fn contains(&self, site: Site) -> bool {
        (1..=self.x_i).contains(&site.i) && (1..=self.x_j).contains(&site.j)
    }

    /// 0-based row-major index of `site`.
    pub fn index(&self, site: Site) -> Result<usize> {
        if !self.contains(site) {
            return Err(Error::Index(format!(
                "site {site} outside {}x{} grid",
                self.x_i, self.x_j
            )));
        }
        Ok((site.i - 1) * self.x_j + (site.j - 1))
    }

    /// 1-based linear index `(i-1) X_J + j`.
    pub fn flatten(&self, site: Site) -> Result<usize> {
        self.index(site).map(|k| k + 1)
    }

    /// Inverse of [`GridScenario::flatten`].
    pub fn unflatten(&self, linear: usize) -> Result<Site> {
        if linear == 0 || linear > self.num_sites() {
            return Err(Error::Index(format!(
                "linear index {linear} outside 1..={}",
                self.num_sites()
            )));
        }
        Ok(self.site(linear - 1))
    }

    /// Site at 0-based index `idx`. Panics if out of range.
    pub fn site(&self, idx: usize) -> Site {
        assert!(idx < self.num_sites(), "site index {idx} out of range");
        Site::new(idx / self.x_j + 1, idx % self.x_j + 1)
    }

    /// Grid-adjacent crossroads in Up, Down, Left, Right order.
    pub fn neighbors(&self, site: Site) -> Result<Vec<Site>> {
        let idx = self.index(site)?;
        Ok(self.neighbor_indices(idx).map(|(_, n)| self.site(n)).collect())
    }

    /// `(direction, 0-based index)` of each existing neighbor of `idx`.
    pub fn neighbor_indices(&self, idx: usize) -> impl Iterator<Item = (Direction, usize)> + '_ {
        let (i, j) = (idx / self.x_j, idx % self.x_j);
        Direction::ALL.into_iter().filter_map(move |d| {
            let n = match d {
                Direction::Up if i > 0 => idx - self.x_j,
                Direction::Down if i + 1 < self.x_i => idx + self.x_j,
                Direction::Left if j > 0 => idx - 1,
                Direction::Right if j + 1 < self.x_j => idx + 1,
                _ => return None,
            };
            Some((d, n))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_i < 1 || self.x_j < 1 {
            return Err(Error::validation("grid needs x_i >= 1 and x_j >= 1"));
        }
        let n = self.num_sites();
        if self.crowded_range.len() != n {
            return Err(Error::validation(format!(
                "crowded range matrix has {} entries, grid has {n} crossroads",
                self.crowded_range.len()
            )));
        }
        check(
            self.street_length.is_finite() && self.street_length > 0.0,
            "street_length > 0 violated",
        )?;
        check(self.budget <= n, "budget K <= N violated")?;
        check(
            self.wet_range > 0.0 && self.wit_range.is_finite(),
            "ranges must be positive and finite",
        )?;
        check(self.wet_range < self.wit_range, "r^E < r^D violated")?;
        for (idx, &rc) in self.crowded_range.iter().enumerate() {
            let site = self.site(idx);
            if !(rc.is_finite() && rc >= 0.0) {
                return Err(Error::validation(format!(
                    "crowded range at {site} must be finite and >= 0"
                )));
            }
            let widest = self.wit_range.max(self.wet_range).max(rc);
            if self.street_length <= 2.0 * widest {
                return Err(Error::validation(format!(
                    "l > 2*max(r^D, r^E, r^C) violated at {site}: l = {}, max = {widest}",
                    self.street_length
                )));
            }
        }
        check((0.0..=1.0).contains(&self.alpha), "0 <= alpha <= 1 violated")?;
        check(
            self.rectify_eff > 0.0 && self.rectify_eff <= 1.0,
            "0 < delta <= 1 violated",
        )?;
        check(self.battery_capacity > 0.0, "Q > 0 violated")?;
        check(
            self.observation_time > 0.0 && self.observation_time.is_finite(),
            "T > 0 violated",
        )?;
        check(self.tx_power > 0.0, "P > 0 violated")?;
        check(self.download_rate >= 0.0, "download rate must be >= 0")?;

        let pl = &self.path_loss;
        check(pl.ref_distance > 0.0, "reference distance > 0 violated")?;
        check(
            pl.ref_loss > 0.0 && pl.ref_loss <= 1.0,
            "0 < h0 <= 1 violated",
        )?;
        check(pl.exponent > 1.0, "path-loss exponent beta > 1 violated")?;
        check(
            pl.ref_distance <= self.wet_range.min(self.wit_range),
            "reference distance <= min(r^E, r^D) violated",
        )?;
        Ok(())
    }
}

fn check(ok: bool, msg: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::validation(msg))
    }
}

/// One mobile user: speeds and turning behaviour.
#[derive(Debug, Clone, PartialEq)]
pub struct UserProfile {
    pub id: usize,
    pub base_speed: f64,
    /// Speed inside each crossroad's crowded range, row-major.
    pub crowd_speed: Vec<f64>,
    /// Per crossroad, probability of leaving along each [`Direction`]
    /// (indexed by [`Direction::slot`]). Missing streets carry 0.
    pub turn_prob: Vec<[f64; 4]>,
}

impl UserProfile {
    /// Uniform turning over existing neighbors at every crossroad.
    pub fn uniform(id: usize, grid: &GridScenario, base_speed: f64, crowd_speed: f64) -> Self {
        let n = grid.num_sites();
        UserProfile {
            id,
            base_speed,
            crowd_speed: vec![crowd_speed; n],
            turn_prob: (0..n).map(|idx| uniform_turns(grid, idx)).collect(),
        }
    }

    pub fn turn(&self, idx: usize, dir: Direction) -> f64 {
        self.turn_prob[idx][dir.slot()]
    }

    pub fn validate(&self, grid: &GridScenario) -> Result<()> {
        let n = grid.num_sites();
        let user = self.id;
        if self.crowd_speed.len() != n || self.turn_prob.len() != n {
            return Err(Error::validation(format!(
                "user {user}: per-crossroad tables must have {n} entries"
            )));
        }
        if !(self.base_speed.is_finite() && self.base_speed > 0.0) {
            return Err(Error::validation(format!("user {user}: base speed must be > 0")));
        }
        for idx in 0..n {
            let site = grid.site(idx);
            let vc = self.crowd_speed[idx];
            if !(vc > 0.0 && vc <= self.base_speed) {
                return Err(Error::validation(format!(
                    "user {user}: 0 < v_c <= v_0 violated at {site} (v_c = {vc}, v_0 = {})",
                    self.base_speed
                )));
            }
            let probs = &self.turn_prob[idx];
            let mut present = [false; 4];
            for (dir, _) in grid.neighbor_indices(idx) {
                present[dir.slot()] = true;
            }
            for d in Direction::ALL {
                let p = probs[d.slot()];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::validation(format!(
                        "user {user}: turn probability {p} at {site} outside [0,1]"
                    )));
                }
                if !present[d.slot()] && p != 0.0 {
                    return Err(Error::validation(format!(
                        "user {user}: turn probability toward a non-neighbor of {site}"
                    )));
                }
            }
            // An isolated crossroad (1x1 grid) has no streets to normalize over.
            if present.iter().any(|&p| p) {
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > TURN_SUM_TOL {
                    return Err(Error::validation(format!(
                        "user {user}: turn probabilities at {site} sum to {sum}, expected 1"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn uniform_turns(grid: &GridScenario, idx: usize) -> [f64; 4] {
    let mut row = [0.0; 4];
    let dirs: Vec<Direction> = grid.neighbor_indices(idx).map(|(d, _)| d).collect();
    for d in &dirs {
        row[d.slot()] = 1.0 / dirs.len() as f64;
    }
    row
}

/// A validated grid together with its users.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub grid: GridScenario,
    pub users: Vec<UserProfile>,
}

impl Scenario {
    pub fn new(grid: GridScenario, users: Vec<UserProfile>) -> Result<Self> {
        let scenario = Scenario { grid, users };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.users.is_empty() {
            return Err(Error::validation("scenario has no users"));
        }
        let mut ids: Vec<usize> = self.users.iter().map(|u| u.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::validation("user ids must be unique"));
        }
        self.users.iter().try_for_each(|u| u.validate(&self.grid))
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }
}
