//! LP relaxation of the deployment problems and the one-variable-per-round
//! branch-and-bound dive.
//!
//! Variable layout: `y_0..y_{N-1}` (site indicators in flattened order),
//! then `R_0..R_{M-1}` for schemes E and B. Row layout: the budget row,
//! then for every user `R_m - sum_s a_{m,s} y_s <= 0` followed by
//! `R_m <= Q`, and for B a final `sum R_m >= alpha * epsilon_max`.

use super::{DeploymentProblem, Scheme, SolveOutcome};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, Relation};

/// A relaxed `y` farther than this from the nearest integer is fractional.
pub const FRACTIONAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSolution {
    /// Site indicators in `[0, 1]`.
    pub y: Vec<f64>,
    /// Linearized per-user energies (empty for scheme I).
    pub r: Vec<f64>,
    pub objective: f64,
    pub simplex_iterations: usize,
}

impl RelaxedSolution {
    /// Most fractional indicator, lowest index on ties.
    pub fn branch_variable(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (s, &v) in self.y.iter().enumerate() {
            if (v - v.round()).abs() <= FRACTIONAL_TOL {
                continue;
            }
            let dist = (v - 0.5).abs();
            if best.is_none_or(|(_, d)| dist < d) {
                best = Some((s, dist));
            }
        }
        best.map(|(s, _)| s)
    }

    pub fn is_integral(&self) -> bool {
        self.branch_variable().is_none()
    }
}

pub fn build_relaxation(problem: &DeploymentProblem<'_>, lower: &[f64], upper: &[f64]) -> LpProblem {
    let inst = problem.instance;
    let n = inst.num_sites();
    let m = if problem.scheme == Scheme::I { 0 } else { inst.num_users() };
    let width = n + m;

    let mut objective = vec![0.0; width];
    match problem.scheme {
        Scheme::I | Scheme::B => objective[..n].copy_from_slice(&inst.wit_coeffs),
        Scheme::E => objective[n..].fill(1.0),
    }

    let mut lp = LpProblem {
        objective,
        rows: Vec::new(),
        lower: lower.iter().copied().chain(std::iter::repeat_n(0.0, m)).collect(),
        upper: upper.iter().copied().chain(std::iter::repeat_n(f64::INFINITY, m)).collect(),
    };

    let mut budget = vec![0.0; width];
    budget[..n].fill(1.0);
    lp.add_row(budget, Relation::Eq, problem.k as f64);

    for user in 0..m {
        let mut link = vec![0.0; width];
        for (c, a) in link[..n].iter_mut().zip(&inst.energy_coeffs[user]) {
            *c = -a;
        }
        link[n + user] = 1.0;
        lp.add_row(link, Relation::Le, 0.0);

        let mut cap = vec![0.0; width];
        cap[n + user] = 1.0;
        lp.add_row(cap, Relation::Le, inst.battery_capacity());
    }

    if problem.scheme == Scheme::B {
        let mut total = vec![0.0; width];
        total[n..].fill(1.0);
        lp.add_row(total, Relation::Ge, problem.energy_target());
    }
    lp
}

fn solve_bounded(problem: &DeploymentProblem<'_>, lower: &[f64], upper: &[f64]) -> Result<Option<RelaxedSolution>> {
    let lp = build_relaxation(problem, lower, upper);
    let sol = lp::solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {
            let n = problem.instance.num_sites();
            Ok(Some(RelaxedSolution {
                y: sol.x[..n].to_vec(),
                r: sol.x[n..].to_vec(),
                objective: sol.objective_value,
                simplex_iterations: sol.iterations,
            }))
        }
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::InvalidLp("deployment relaxation reported unbounded".into())),
    }
}

/// Root relaxation (all indicators in `[0, 1]`).
pub fn solve_relaxation(problem: &DeploymentProblem<'_>) -> Result<RelaxedSolution> {
    problem.validate()?;
    let n = problem.instance.num_sites();
    solve_bounded(problem, &vec![0.0; n], &vec![1.0; n])?.ok_or(Error::RelaxationInfeasible)
}

pub fn solve_bnb_dive(problem: &DeploymentProblem<'_>) -> Result<SolveOutcome> {
    problem.validate()?;
    let n = problem.instance.num_sites();
    let mut lower = vec![0.0; n];
    let mut upper = vec![1.0; n];
    let mut current = solve_bounded(problem, &lower, &upper)?.ok_or(Error::RelaxationInfeasible)?;
    let mut rounds = 1;
    let mut lp_solves = 1;

    while let Some(s) = current.branch_variable() {
        let mut upper_down = upper.clone();
        upper_down[s] = 0.0;
        let mut lower_up = lower.clone();
        lower_up[s] = 1.0;
        let (down, up) = rayon::join(
            || solve_bounded(problem, &lower, &upper_down),
            || solve_bounded(problem, &lower_up, &upper),
        );
        lp_solves += 2;
        rounds += 1;
        current = match (down?, up?) {
            (Some(d), Some(u)) => {
                if d.objective > u.objective {
                    upper = upper_down;
                    d
                } else {
                    lower = lower_up;
                    u
                }
            }
            (Some(d), None) => {
                upper = upper_down;
                d
            }
            (None, Some(u)) => {
                lower = lower_up;
                u
            }
            (None, None) => {
                return Err(Error::Infeasible(format!(
                    "both children infeasible after fixing site {s} in round {rounds}"
                )))
            }
        };
    }

    let sites: Vec<usize> = (0..n).filter(|&s| current.y[s] > 0.5).collect();
    if sites.len() != problem.k {
        return Err(Error::Infeasible(format!(
            "dive ended with {} sites for budget {}",
            sites.len(),
            problem.k
        )));
    }
    let outcome = problem.outcome(&sites, rounds, lp_solves);
    if problem.scheme == Scheme::B && !problem.energy_feasible(outcome.evaluated.epsilon) {
        return Err(Error::Infeasible(format!(
            "dive plan harvests {:.6e} below target {:.6e}",
            outcome.evaluated.epsilon,
            problem.energy_target()
        )));
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deploy::tests::small_instance;
    use crate::deploy::{compute_epsilon_max, solve_exhaustive, DEFAULT_CANDIDATE_CAP};

    #[test]
    fn relaxation_shapes() {
        let inst = small_instance(3, 4, 11);
        let (lo, hi) = (vec![0.0; 9], vec![1.0; 9]);
        let i = build_relaxation(&DeploymentProblem::i(&inst, 2), &lo, &hi);
        assert_eq!((i.num_vars(), i.rows.len()), (9, 1));
        let e = build_relaxation(&DeploymentProblem::e(&inst, 2), &lo, &hi);
        assert_eq!((e.num_vars(), e.rows.len()), (13, 9));
        let b = build_relaxation(&DeploymentProblem::b_with(&inst, 2, 0.5, 1.0), &lo, &hi);
        assert_eq!((b.num_vars(), b.rows.len()), (13, 10));
        assert_eq!(b.rows[9].relation, Relation::Ge);
        assert_eq!(b.rows[9].rhs, 0.5);
    }

    #[test]
    fn i_relaxation_is_sum_of_top_k() {
        let inst = small_instance(3, 5, 12);
        for k in 0..=9 {
            let relaxed = solve_relaxation(&DeploymentProblem::i(&inst, k)).unwrap();
            let mut sorted = inst.wit_coeffs.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let top: f64 = sorted[..k].iter().sum();
            assert!((relaxed.objective - top).abs() < 1e-9, "k={k}");
        }
    }

    #[test]
    fn i_dive_finishes_at_root() {
        let inst = small_instance(4, 6, 13);
        for k in 1..=5 {
            let out = solve_bnb_dive(&DeploymentProblem::i(&inst, k)).unwrap();
            assert_eq!(out.iterations, 1);
            let exact = solve_exhaustive(&DeploymentProblem::i(&inst, k), DEFAULT_CANDIDATE_CAP).unwrap();
            assert!((out.evaluated.eta - exact.evaluated.eta).abs() < 1e-12);
        }
    }

    #[test]
    fn b_at_alpha_zero_matches_i_relaxation() {
        let inst = small_instance(3, 4, 14);
        let eps_max = compute_epsilon_max(&inst, 3, DEFAULT_CANDIDATE_CAP).unwrap();
        let b = solve_relaxation(&DeploymentProblem::b_with(&inst, 3, 0.0, eps_max)).unwrap();
        let i = solve_relaxation(&DeploymentProblem::i(&inst, 3)).unwrap();
        assert!((b.objective - i.objective).abs() < 1e-9);
    }

    #[test]
    fn b_dive_respects_target_and_exhaustive_bound() {
        let inst = small_instance(3, 5, 15);
        let eps_max = compute_epsilon_max(&inst, 2, DEFAULT_CANDIDATE_CAP).unwrap();
        let problem = DeploymentProblem::b_with(&inst, 2, 0.5, eps_max);
        let dive = solve_bnb_dive(&problem).unwrap();
        let exact = solve_exhaustive(&problem, DEFAULT_CANDIDATE_CAP).unwrap();
        assert!(dive.objective <= exact.objective + 1e-12);
        assert!(dive.evaluated.epsilon >= 0.5 * eps_max - 1e-9);
        assert_eq!(dive.evaluated.plan.count(), 2);
    }

    #[test]
    fn full_budget_needs_no_branching() {
        let inst = small_instance(3, 3, 16);
        let out = solve_bnb_dive(&DeploymentProblem::e(&inst, 9)).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.evaluated.plan.count(), 9);
    }

    #[test]
    fn unreachable_target_is_root_infeasible() {
        let inst = small_instance(3, 2, 17);
        let problem = DeploymentProblem::b_with(&inst, 1, 1.0, 1e6);
        assert!(matches!(solve_bnb_dive(&problem), Err(Error::RelaxationInfeasible)));
    }

    #[test]
    fn branch_variable_prefers_half_then_lowest_index() {
        let sol = |y: Vec<f64>| RelaxedSolution {
            y,
            r: vec![],
            objective: 0.0,
            simplex_iterations: 0,
        };
        assert_eq!(sol(vec![1.0, 0.25, 0.75, 0.0]).branch_variable(), Some(1));
        assert_eq!(sol(vec![0.9, 0.45, 0.5, 0.0]).branch_variable(), Some(2));
        assert_eq!(sol(vec![1.0, 1e-8, 0.0]).branch_variable(), None);
    }
}
