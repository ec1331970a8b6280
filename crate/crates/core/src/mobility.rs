//! Region-level Markov model of a user's walk and the sojourn statistics
//! derived from it.
//!
//! The state is the square region around a crossroad. A visit covers one full
//! street length `l`: half a street in, half a street out, crossing the
//! crowded circle and the WIT/WET circles along a diameter.

use log::debug;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scenario::{GridScenario, Site, UserProfile, TURN_SUM_TOL};

/// Max-norm bound on `phi P - phi` for an accepted stationary vector.
pub const STATIONARY_RESIDUAL_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITER: usize = 1_000_000;

/// Row-stochastic transition matrix over regions in flattened order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    /// Id of the user whose chain this is.
    pub user: usize,
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    /// Wraps a row-major `n x n` matrix, checking that rows sum to one.
    pub fn from_rows(user: usize, n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n || n == 0 {
            return Err(Error::validation(format!(
                "transition matrix needs {n}x{n} entries, got {}",
                entries.len()
            )));
        }
        for (a, row) in entries.chunks(n).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > TURN_SUM_TOL || row.iter().any(|&p| p < 0.0) {
                return Err(Error::validation(format!(
                    "user {user}: transition row {} sums to {sum}",
                    a + 1
                )));
            }
        }
        Ok(TransitionMatrix { user, n, entries })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.n..(from + 1) * self.n]
    }

    fn successors(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.row(a)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(b, _)| b)
    }

    fn reachable(&self, start: usize, forward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n];
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(a) = stack.pop() {
            for b in 0..self.n {
                let p = if forward { self.get(a, b) } else { self.get(b, a) };
                if p > 0.0 && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen
    }

    pub fn is_irreducible(&self) -> bool {
        self.reachable(0, true).into_iter().all(|s| s) && self.reachable(0, false).into_iter().all(|s| s)
    }

    /// Period of an irreducible chain (1 means aperiodic).
    pub fn period(&self) -> usize {
        let mut level = vec![usize::MAX; self.n];
        level[0] = 0;
        let mut queue = std::collections::VecDeque::from([0]);
        let mut g = 0usize;
        while let Some(a) = queue.pop_front() {
            for b in self.successors(a) {
                if level[b] == usize::MAX {
                    level[b] = level[a] + 1;
                    queue.push_back(b);
                } else {
                    g = gcd(g, (level[a] + 1).abs_diff(level[b]));
                }
            }
        }
        g.max(1)
    }

    /// `max_b |(phi P)_b - phi_b|`.
    pub fn residual(&self, phi: &[f64]) -> f64 {
        (0..self.n)
            .map(|b| {
                let flow: f64 = (0..self.n).map(|a| phi[a] * self.get(a, b)).sum();
                (flow - phi[b]).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Maps a user's turning probabilities onto the flattened transition matrix.
/// An isolated crossroad (1x1 grid) becomes an absorbing self-loop.
pub fn build_transition_matrix(user: &UserProfile, grid: &GridScenario) -> Result<TransitionMatrix> {
    let n = grid.num_sites();
    let mut entries = vec![0.0; n * n];
    for a in 0..n {
        let mut any = false;
        for (dir, b) in grid.neighbor_indices(a) {
            entries[a * n + b] = user.turn(a, dir);
            any = true;
        }
        if !any {
            entries[a * n + a] = 1.0;
        }
    }
    TransitionMatrix::from_rows(user.id, n, entries)
}

/// Solves `phi P = phi, sum(phi) = 1`.
///
/// Uses a direct LU solve with one balance equation replaced by the
/// normalization row; falls back to power iteration on the lazy chain
/// `(P + I) / 2` when the direct answer misses the residual bound. Periodic
/// chains are accepted (the solution still exists and is unique) and only
/// logged.
pub fn stationary_distribution(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    if !tm.is_irreducible() {
        return Err(Error::NotErgodic {
            user: tm.user,
            reason: "chain is reducible".into(),
        });
    }
    let period = tm.period();
    if period > 1 {
        debug!(
            "mobility chain of user {} is periodic (period {period}); using the unique stationary solution",
            tm.user
        );
    }

    let n = tm.dim();
    let direct = solve_direct(tm);
    let phi = match direct {
        Some(phi) if tm.residual(&phi) <= STATIONARY_RESIDUAL_TOL => phi,
        _ => power_iteration(tm)?,
    };
    debug_assert_eq!(phi.len(), n);
    Ok(phi)
}

fn solve_direct(tm: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = tm.dim();
    let mut a = DMatrix::<f64>::from_fn(n, n, |r, c| tm.get(c, r) - if r == c { 1.0 } else { 0.0 });
    for c in 0..n {
        a[(n - 1, c)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a.lu().solve(&b)?;
    if x.iter().any(|v| !v.is_finite() || *v < -1e-12) {
        return None;
    }
    Some(normalize(x.iter().map(|v| v.max(0.0)).collect()))
}

fn power_iteration(tm: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = tm.dim();
    let mut phi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..POWER_MAX_ITER {
        for (b, slot) in next.iter_mut().enumerate() {
            let flow: f64 = (0..n).map(|a| phi[a] * tm.get(a, b)).sum();
            *slot = 0.5 * (flow + phi[b]);
        }
        let delta = phi
            .iter()
            .zip(&next)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut phi, &mut next);
        if delta <= POWER_TOL {
            let phi = normalize(phi);
            if tm.residual(&phi) <= STATIONARY_RESIDUAL_TOL {
                return Ok(phi);
            }
            break;
        }
    }
    Err(Error::NotErgodic {
        user: tm.user,
        reason: "stationary solve did not converge".into(),
    })
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

/// Time to cross one region: `2 (r_c / v_c + (l/2 - r_c) / v_0)`.
pub fn region_sojourn_time(street_length: f64, crowded: f64, crowd_speed: f64, base_speed: f64) -> f64 {
    2.0 * (crowded / crowd_speed + (street_length / 2.0 - crowded) / base_speed)
}

/// Time spent inside a circle of radius `range` around the crossroad during
/// one pass. The `range >= crowded` branch is inclusive; both branches agree
/// at equality.
pub fn range_sojourn_time(range: f64, crowded: f64, crowd_speed: f64, base_speed: f64) -> f64 {
    if range < crowded {
        2.0 * range / crowd_speed
    } else {
        2.0 * crowded / crowd_speed + 2.0 * (range - crowded) / base_speed
    }
}

pub fn region_sojourn(user: &UserProfile, grid: &GridScenario, site: Site) -> Result<f64> {
    let idx = grid.index(site)?;
    Ok(region_sojourn_time(
        grid.street_length,
        grid.crowded_range[idx],
        user.crowd_speed[idx],
        user.base_speed,
    ))
}

pub fn wit_sojourn(user: &UserProfile, grid: &GridScenario, site: Site) -> Result<f64> {
    let idx = grid.index(site)?;
    Ok(range_sojourn_time(
        grid.wit_range,
        grid.crowded_range[idx],
        user.crowd_speed[idx],
        user.base_speed,
    ))
}

pub fn wet_sojourn(user: &UserProfile, grid: &GridScenario, site: Site) -> Result<f64> {
    let idx = grid.index(site)?;
    Ok(range_sojourn_time(
        grid.wet_range,
        grid.crowded_range[idx],
        user.crowd_speed[idx],
        user.base_speed,
    ))
}

/// Stationary and sojourn statistics of one user; every vector is indexed by
/// flattened site.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityAnalysis {
    pub user: usize,
    pub stationary: Vec<f64>,
    pub region_sojourn: Vec<f64>,
    pub wit_sojourn: Vec<f64>,
    pub wet_sojourn: Vec<f64>,
    pub sojourn_dist: Vec<f64>,
    pub total_region: Vec<f64>,
    pub total_wit: Vec<f64>,
    pub total_wet: Vec<f64>,
}

impl MobilityAnalysis {
    pub fn num_sites(&self) -> usize {
        self.stationary.len()
    }

    /// Expected number of passes through site `idx` over the horizon.
    pub fn pass_count(&self, idx: usize) -> f64 {
        self.total_wet[idx] / self.wet_sojourn[idx]
    }
}

pub fn analyze(user: &UserProfile, grid: &GridScenario) -> Result<MobilityAnalysis> {
    let tm = build_transition_matrix(user, grid)?;
    let stationary = stationary_distribution(&tm)?;
    Ok(analyze_with_stationary(user, grid, stationary))
}

/// Sojourn statistics for a known stationary vector.
pub fn analyze_with_stationary(user: &UserProfile, grid: &GridScenario, stationary: Vec<f64>) -> MobilityAnalysis {
    let n = grid.num_sites();
    let speeds = |idx: usize| (grid.crowded_range[idx], user.crowd_speed[idx], user.base_speed);
    let region_sojourn: Vec<f64> = (0..n)
        .map(|idx| {
            let (rc, vc, v0) = speeds(idx);
            region_sojourn_time(grid.street_length, rc, vc, v0)
        })
        .collect();
    let wit_sojourn: Vec<f64> = (0..n)
        .map(|idx| {
            let (rc, vc, v0) = speeds(idx);
            range_sojourn_time(grid.wit_range, rc, vc, v0)
        })
        .collect();
    let wet_sojourn: Vec<f64> = (0..n)
        .map(|idx| {
            let (rc, vc, v0) = speeds(idx);
            range_sojourn_time(grid.wet_range, rc, vc, v0)
        })
        .collect();

    let weighted: Vec<f64> = stationary.iter().zip(&region_sojourn).map(|(p, d)| p * d).collect();
    let total_weight: f64 = weighted.iter().sum();
    let sojourn_dist: Vec<f64> = weighted.iter().map(|w| w / total_weight).collect();

    let t = grid.observation_time;
    let total_region: Vec<f64> = sojourn_dist.iter().map(|p| p * t).collect();
    let total_wit = (0..n)
        .map(|k| total_region[k] * wit_sojourn[k] / region_sojourn[k])
        .collect();
    let total_wet = (0..n)
        .map(|k| total_region[k] * wet_sojourn[k] / region_sojourn[k])
        .collect();

    MobilityAnalysis {
        user: user.id,
        stationary,
        region_sojourn,
        wit_sojourn,
        wet_sojourn,
        sojourn_dist,
        total_region,
        total_wit,
        total_wet,
    }
}

/// `k_s = sum_m tau^D_{m,s} / (M T)`: each site's share of the total WIT
/// opportunity if an H-AP were placed there.
pub fn wit_coefficients(analyses: &[MobilityAnalysis], observation_time: f64) -> Vec<f64> {
    let Some(first) = analyses.first() else {
        return Vec::new();
    };
    let scale = analyses.len() as f64 * observation_time;
    let mut k = vec![0.0; first.num_sites()];
    for a in analyses {
        for (slot, tau) in k.iter_mut().zip(&a.total_wit) {
            *slot += tau;
        }
    }
    k.iter_mut().for_each(|v| *v /= scale);
    k
}
