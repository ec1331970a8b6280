//! Enumeration of every K-subset of sites.
//!
//! Subsets are visited in lexicographic order of their sorted site lists,
//! and a candidate replaces the incumbent only if strictly better, so ties
//! resolve to the earliest subset. Work is split by first site across rayon
//! workers; the reduction keeps the earliest partition among equal values,
//! which makes the result independent of the worker count.

use rayon::prelude::*;

use super::{DeploymentProblem, Scheme, SolveOutcome};
use crate::error::{Error, Result};

pub const DEFAULT_CANDIDATE_CAP: u128 = 2_000_000;

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

struct Search<'a> {
    problem: &'a DeploymentProblem<'a>,
    chosen: Vec<usize>,
    /// Per depth, each user's accumulated (unclamped) energy.
    energy: Vec<Vec<f64>>,
    eta: Vec<f64>,
    best: Option<(f64, Vec<usize>)>,
}

impl<'a> Search<'a> {
    fn new(problem: &'a DeploymentProblem<'a>) -> Self {
        let m = problem.instance.num_users();
        let k = problem.k;
        Search {
            problem,
            chosen: Vec::with_capacity(k),
            energy: vec![vec![0.0; m]; k + 1],
            eta: vec![0.0; k + 1],
            best: None,
        }
    }

    fn needs_energy(&self) -> bool {
        self.problem.scheme != Scheme::I
    }

    fn push(&mut self, site: usize) {
        let depth = self.chosen.len();
        let inst = self.problem.instance;
        self.eta[depth + 1] = self.eta[depth] + inst.wit_coeffs[site];
        if self.needs_energy() {
            let (lo, hi) = self.energy.split_at_mut(depth + 1);
            for ((next, prev), row) in hi[0].iter_mut().zip(&lo[depth]).zip(&inst.energy_coeffs) {
                *next = prev + row[site];
            }
        }
        self.chosen.push(site);
    }

    fn leaf(&mut self) {
        let depth = self.chosen.len();
        let p = self.problem;
        let value = match p.scheme {
            Scheme::I => self.eta[depth],
            Scheme::E => clamp_sum(&self.energy[depth], p.instance.battery_capacity()),
            Scheme::B => {
                let eps = clamp_sum(&self.energy[depth], p.instance.battery_capacity());
                if !p.energy_feasible(eps) {
                    return;
                }
                self.eta[depth]
            }
        };
        if self.best.as_ref().is_none_or(|(b, _)| value > *b) {
            self.best = Some((value, self.chosen.clone()));
        }
    }

    fn descend(&mut self, next: usize) {
        let n = self.problem.instance.num_sites();
        if self.chosen.len() == self.problem.k {
            self.leaf();
            return;
        }
        let remaining = self.problem.k - self.chosen.len();
        for site in next..=n - remaining {
            self.push(site);
            self.descend(site + 1);
            self.chosen.pop();
        }
    }
}

fn clamp_sum(energy: &[f64], q: f64) -> f64 {
    energy.iter().map(|e| e.min(q)).sum()
}

pub fn solve_exhaustive(problem: &DeploymentProblem<'_>, cap: u128) -> Result<SolveOutcome> {
    problem.validate()?;
    let n = problem.instance.num_sites();
    let k = problem.k;
    let candidates = binomial(n, k);
    if candidates > cap {
        return Err(Error::TooLarge { candidates, cap });
    }

    let best = if k == 0 {
        let mut s = Search::new(problem);
        s.leaf();
        s.best
    } else {
        (0..=n - k)
            .into_par_iter()
            .map(|first| {
                let mut s = Search::new(problem);
                s.push(first);
                s.descend(first + 1);
                s.best
            })
            .collect::<Vec<_>>()
            .into_iter()
            .flatten()
            .fold(None, |acc: Option<(f64, Vec<usize>)>, cand| match acc {
                Some((v, _)) if v >= cand.0 => acc,
                _ => Some(cand),
            })
    };

    let (_, sites) = best.ok_or_else(|| {
        Error::Infeasible(format!(
            "no {k}-site plan reaches energy {:.6e}",
            problem.alpha * problem.epsilon_max
        ))
    })?;
    Ok(problem.outcome(&sites, 1, 0))
}
