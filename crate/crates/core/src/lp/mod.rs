//! Dense two-phase primal simplex for small bounded linear programs.
//!
//! Problems are `max c.x` subject to `<=`, `=`, `>=` rows and per-variable
//! bounds `lower <= x <= upper` (lower finite, upper possibly infinite).
//! Variables are shifted to `x - lower >= 0`, finite upper bounds become
//! explicit rows, and phase 1 drives artificial variables to zero.
//!
//! Numerics: pivot epsilon 1e-10, feasibility epsilon 1e-9. Bland's rule is
//! the default and guarantees termination; the largest-coefficient rule is
//! faster on some inputs but can cycle on degenerate problems.

mod text;

pub use text::parse_lp_text;

use crate::error::{Error, Result};

pub const PIVOT_EPS: f64 = 1e-10;
pub const FEAS_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    /// Coefficients of the maximized objective.
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// Problem with `n` variables boxed in `[0, 1]` and no rows.
    pub fn boxed(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![1.0; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.rows.push(Row { coeffs, relation, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidLp("bound vectors must match the objective".into()));
        }
        for (k, row) in self.rows.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::InvalidLp(format!("row {k} has {} coefficients, expected {n}", row.coeffs.len())));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidLp(format!("row {k} is not finite")));
            }
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || u.is_nan() || l > u || !self.objective[j].is_finite() {
                return Err(Error::InvalidLp(format!("variable {j} has bounds [{l}, {u}]")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row (scaled by `1 + |rhs|`) or bound.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.rows.iter().map(|r| {
            let lhs: f64 = r.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let gap = match r.relation {
                Relation::Le => lhs - r.rhs,
                Relation::Ge => r.rhs - lhs,
                Relation::Eq => (lhs - r.rhs).abs(),
            };
            gap.max(0.0) / (1.0 + r.rhs.abs())
        });
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn without_point(status: LpStatus, iterations: usize) -> Self {
        LpSolution {
            status,
            x: Vec::new(),
            objective_value: f64::NAN,
            iterations,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PivotRule {
    /// Lowest-index improving column, lowest-index leaving variable on ties.
    Bland,
    /// Most improving reduced cost. No anti-cycling.
    LargestCoefficient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SolverOptions {
    pub pivot_rule: PivotRule,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            pivot_rule: PivotRule::Bland,
            max_iterations: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Structural,
    Slack,
    Surplus,
    Artificial,
}

/// Equality form `A z = b, z >= 0, b >= 0` with an initial basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub kinds: Vec<ColumnKind>,
    /// Initial basic column of each row.
    pub basis: Vec<usize>,
    /// Objective over all columns (zero beyond the structural ones).
    pub cost: Vec<f64>,
    /// `c . lower`, added back to recover the original objective.
    pub offset: f64,
    pub lower: Vec<f64>,
}

impl StandardForm {
    pub fn count(&self, kind: ColumnKind) -> usize {
        self.kinds.iter().filter(|&&k| k == kind).count()
    }

    /// Original-space point for a standard-form point `z`.
    pub fn recover(&self, z: &[f64]) -> Vec<f64> {
        self.lower.iter().zip(z).map(|(l, v)| l + v).collect()
    }

    /// Original objective at standard-form point `z`.
    pub fn objective_at(&self, z: &[f64]) -> f64 {
        self.offset + self.cost.iter().zip(z).map(|(c, v)| c * v).sum::<f64>()
    }
}

pub fn to_standard_form(p: &LpProblem) -> Result<StandardForm> {
    p.validate()?;
    let n = p.num_vars();

    let mut rows: Vec<(Vec<f64>, Relation, f64)> = p
        .rows
        .iter()
        .map(|r| {
            let shift: f64 = r.coeffs.iter().zip(&p.lower).map(|(a, l)| a * l).sum();
            (r.coeffs.clone(), r.relation, r.rhs - shift)
        })
        .collect();
    for j in 0..n {
        if p.upper[j].is_finite() {
            let mut coeffs = vec![0.0; n];
            coeffs[j] = 1.0;
            rows.push((coeffs, Relation::Le, p.upper[j] - p.lower[j]));
        }
    }
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            coeffs.iter_mut().for_each(|a| *a = -*a);
            *rhs = -*rhs;
            *rel = rel.flipped();
        }
    }

    let mut kinds = vec![ColumnKind::Structural; n];
    let mut slack_col = Vec::with_capacity(rows.len());
    for (_, rel, _) in &rows {
        slack_col.push(match rel {
            Relation::Le => {
                kinds.push(ColumnKind::Slack);
                Some((kinds.len() - 1, 1.0))
            }
            Relation::Ge => {
                kinds.push(ColumnKind::Surplus);
                Some((kinds.len() - 1, -1.0))
            }
            Relation::Eq => None,
        });
    }
    let mut basis = Vec::with_capacity(rows.len());
    let mut art_col = Vec::with_capacity(rows.len());
    for (k, (_, rel, _)) in rows.iter().enumerate() {
        if *rel == Relation::Le {
            basis.push(slack_col[k].map(|(c, _)| c).unwrap());
            art_col.push(None);
        } else {
            kinds.push(ColumnKind::Artificial);
            basis.push(kinds.len() - 1);
            art_col.push(Some(kinds.len() - 1));
        }
    }

    let width = kinds.len();
    let mut a = Vec::with_capacity(rows.len());
    let mut b = Vec::with_capacity(rows.len());
    for (k, (coeffs, _, rhs)) in rows.into_iter().enumerate() {
        let mut row = vec![0.0; width];
        row[..n].copy_from_slice(&coeffs);
        if let Some((c, v)) = slack_col[k] {
            row[c] = v;
        }
        if let Some(c) = art_col[k] {
            row[c] = 1.0;
        }
        a.push(row);
        b.push(rhs);
    }
    let mut cost = vec![0.0; width];
    cost[..n].copy_from_slice(&p.objective);
    let offset = p.objective.iter().zip(&p.lower).map(|(c, l)| c * l).sum();
    Ok(StandardForm {
        a,
        b,
        kinds,
        basis,
        cost,
        offset,
        lower: p.lower.clone(),
    })
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        self.rows[r].iter_mut().for_each(|v| *v /= p);
        self.rhs[r] /= p;
        self.rows[r][c] = 1.0;
        let pivot_row = self.rows[r].clone();
        let pivot_rhs = self.rhs[r];
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][c];
            if f == 0.0 {
                continue;
            }
            for (v, pv) in self.rows[i].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.rows[i][c] = 0.0;
            self.rhs[i] -= f * pivot_rhs;
            if self.rhs[i].abs() < 1e-13 {
                self.rhs[i] = 0.0;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    fn reduced_costs(&self, cost: &[f64], allowed: &[bool]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for (row, &bv) in self.rows.iter().zip(&self.basis) {
            let cb = cost[bv];
            if cb != 0.0 {
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for (j, ok) in allowed.iter().enumerate() {
            if !ok {
                d[j] = 0.0;
            }
        }
        for &bv in &self.basis {
            d[bv] = 0.0;
        }
        d
    }

    /// Maximizes `cost . z` over columns marked `allowed`.
    fn run(&mut self, cost: &[f64], allowed: &[bool], opts: &SolverOptions) -> Result<PhaseOutcome> {
        loop {
            if self.iterations >= opts.max_iterations {
                return Err(Error::CycleDetected(self.iterations));
            }
            let d = self.reduced_costs(cost, allowed);
            let entering = match opts.pivot_rule {
                PivotRule::Bland => d.iter().position(|&v| v > PIVOT_EPS),
                PivotRule::LargestCoefficient => d
                    .iter()
                    .enumerate()
                    .filter(|(_, &v)| v > PIVOT_EPS)
                    .fold(None, |best: Option<(usize, f64)>, (j, &v)| match best {
                        Some((_, bv)) if bv >= v => best,
                        _ => Some((j, v)),
                    })
                    .map(|(j, _)| j),
            };
            let Some(c) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows.len() {
                let a = self.rows[i][c];
                if a > PIVOT_EPS {
                    let ratio = self.rhs[i] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            self.pivot(r, c);
        }
    }

    fn point(&self, width: usize) -> Vec<f64> {
        let mut z = vec![0.0; width];
        for (i, &bv) in self.basis.iter().enumerate() {
            z[bv] = self.rhs[i].max(0.0);
        }
        z
    }
}

pub fn solve(p: &LpProblem) -> Result<LpSolution> {
    solve_with(p, &SolverOptions::default())
}

pub fn solve_with(p: &LpProblem, opts: &SolverOptions) -> Result<LpSolution> {
    let sf = to_standard_form(p)?;
    let width = sf.kinds.len();
    let n = p.num_vars();
    let mut tab = Tableau {
        rows: sf.a.clone(),
        rhs: sf.b.clone(),
        basis: sf.basis.clone(),
        iterations: 0,
    };

    let is_art: Vec<bool> = sf.kinds.iter().map(|&k| k == ColumnKind::Artificial).collect();
    if is_art.iter().any(|&a| a) {
        let phase1_cost: Vec<f64> = is_art.iter().map(|&a| if a { -1.0 } else { 0.0 }).collect();
        let all = vec![true; width];
        // Phase 1 is bounded below by zero, so it always ends optimal.
        tab.run(&phase1_cost, &all, opts)?;
        let infeasibility: f64 = tab
            .basis
            .iter()
            .zip(&tab.rhs)
            .filter(|(&bv, _)| is_art[bv])
            .map(|(_, v)| v.max(0.0))
            .sum();
        let scale = 1.0 + sf.b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if infeasibility > FEAS_EPS * scale {
            return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.iterations));
        }
        // Pivot remaining zero-level artificials out of the basis; rows with
        // no usable column are redundant and dropped.
        let mut r = 0;
        while r < tab.rows.len() {
            if is_art[tab.basis[r]] {
                let col = (0..width).find(|&j| !is_art[j] && tab.rows[r][j].abs() > PIVOT_EPS);
                match col {
                    Some(c) => {
                        tab.pivot(r, c);
                        tab.iterations -= 1;
                    }
                    None => {
                        tab.rows.remove(r);
                        tab.rhs.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let allowed: Vec<bool> = is_art.iter().map(|&a| !a).collect();
    match tab.run(&sf.cost, &allowed, opts)? {
        PhaseOutcome::Unbounded => Ok(LpSolution::without_point(LpStatus::Unbounded, tab.iterations)),
        PhaseOutcome::Optimal => {
            let z = tab.point(width);
            let mut x = sf.recover(&z[..n]);
            // Snap values within rounding of a bound onto it.
            for j in 0..n {
                if (x[j] - p.lower[j]).abs() < 1e-12 {
                    x[j] = p.lower[j];
                } else if (x[j] - p.upper[j]).abs() < 1e-12 {
                    x[j] = p.upper[j];
                }
            }
            Ok(LpSolution {
                status: LpStatus::Optimal,
                objective_value: p.objective_value(&x),
                x,
                iterations: tab.iterations,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn le(c: &[f64], rhs: f64) -> Row {
        Row {
            coeffs: c.to_vec(),
            relation: Relation::Le,
            rhs,
        }
    }

    #[test]
    fn sum_to_one_on_unit_box() {
        let mut p = LpProblem::boxed(vec![1.0, 1.0]);
        p.add_row(vec![1.0, 1.0], Relation::Eq, 1.0);
        let s = solve(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn standard_form_shapes() {
        let mut p = LpProblem {
            objective: vec![1.0, 2.0],
            rows: vec![le(&[1.0, 1.0], 4.0)],
            lower: vec![0.0; 2],
            upper: vec![f64::INFINITY; 2],
        };
        let sf = to_standard_form(&p).unwrap();
        assert_eq!(sf.count(ColumnKind::Slack), 1);
        assert_eq!(sf.count(ColumnKind::Artificial), 0);

        p.rows[0].relation = Relation::Eq;
        let sf = to_standard_form(&p).unwrap();
        assert_eq!(sf.count(ColumnKind::Slack), 0);
        assert_eq!(sf.count(ColumnKind::Artificial), 1);

        p.rows[0].relation = Relation::Ge;
        let sf = to_standard_form(&p).unwrap();
        assert_eq!(sf.count(ColumnKind::Surplus), 1);
        assert_eq!(sf.count(ColumnKind::Artificial), 1);
    }

    #[test]
    fn standard_form_preserves_objective() {
        let p = LpProblem {
            objective: vec![3.0, -1.0],
            rows: vec![le(&[1.0, 1.0], 4.0)],
            lower: vec![1.0, -2.0],
            upper: vec![3.0, 5.0],
        };
        let sf = to_standard_form(&p).unwrap();
        let x = [2.5, 0.5];
        let z: Vec<f64> = x.iter().zip(&p.lower).map(|(v, l)| v - l).collect();
        let mut full = z.clone();
        full.resize(sf.kinds.len(), 0.0);
        assert_eq!(sf.objective_at(&full), p.objective_value(&x));
        assert_eq!(sf.recover(&z), x.to_vec());
    }

    /// max 3x + 2y  s.t. x + y <= 4, x + 3y >= 6, 0 <= x <= 3, y >= 0.
    #[test]
    fn mixed_two_phase_matches_hand_vertex() {
        let p = LpProblem {
            objective: vec![3.0, 2.0],
            rows: vec![
                le(&[1.0, 1.0], 4.0),
                Row {
                    coeffs: vec![1.0, 3.0],
                    relation: Relation::Ge,
                    rhs: 6.0,
                },
            ],
            lower: vec![0.0, 0.0],
            upper: vec![3.0, f64::INFINITY],
        };
        // Vertices (0,2), (0,4), (3,1) score 4, 8, 11.
        let s = solve(&p).unwrap();
        assert!((s.objective_value - 11.0).abs() < 1e-9);
        assert!((s.x[0] - 3.0).abs() < 1e-9 && (s.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::boxed(vec![1.0, 1.0]);
        p.add_row(vec![1.0, 1.0], Relation::Ge, 3.0);
        assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible);

        let p = LpProblem {
            objective: vec![1.0, 0.0],
            rows: vec![le(&[-1.0, 1.0], 1.0)],
            lower: vec![0.0; 2],
            upper: vec![f64::INFINITY; 2],
        };
        assert_eq!(solve(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut p = LpProblem::boxed(vec![1.0, 2.0, 0.5]);
        p.add_row(vec![1.0, 1.0, 1.0], Relation::Eq, 2.0);
        p.add_row(vec![2.0, 2.0, 2.0], Relation::Eq, 4.0);
        let s = solve(&p).unwrap();
        assert!((s.objective_value - 3.0).abs() < 1e-12);
    }

    #[test]
    fn negative_rhs_rows_are_flipped() {
        // -x - y <= -1  is  x + y >= 1.
        let p = LpProblem {
            objective: vec![-1.0, -2.0],
            rows: vec![le(&[-1.0, -1.0], -1.0)],
            lower: vec![0.0; 2],
            upper: vec![1.0; 2],
        };
        let s = solve(&p).unwrap();
        assert!((s.objective_value + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed() {
        let mut p = LpProblem::boxed(vec![1.0]);
        p.lower[0] = 2.0;
        assert!(matches!(solve(&p), Err(Error::InvalidLp(_))));
        let mut p = LpProblem::boxed(vec![1.0]);
        p.lower[0] = f64::NEG_INFINITY;
        assert!(solve(&p).is_err());
        let mut p = LpProblem::boxed(vec![1.0, 1.0]);
        p.add_row(vec![1.0], Relation::Le, 1.0);
        assert!(solve(&p).is_err());
    }

    #[test]
    fn pivot_rules_agree() {
        let mut p = LpProblem::boxed(vec![0.3, 0.9, 0.2, 0.9, 0.5]);
        p.add_row(vec![1.0; 5], Relation::Eq, 2.0);
        let bland = solve(&p).unwrap();
        let fast = solve_with(
            &p,
            &SolverOptions {
                pivot_rule: PivotRule::LargestCoefficient,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((bland.objective_value - 1.8).abs() < 1e-12);
        assert!((fast.objective_value - 1.8).abs() < 1e-12);
    }

    #[test]
    fn iteration_cap_reports_cycle() {
        let mut p = LpProblem::boxed(vec![1.0, 1.0, 1.0]);
        p.add_row(vec![1.0, 1.0, 1.0], Relation::Eq, 2.0);
        let r = solve_with(
            &p,
            &SolverOptions {
                max_iterations: 1,
                ..Default::default()
            },
        );
        assert!(matches!(r, Err(Error::CycleDetected(_))));
    }

    #[test]
    fn deterministic() {
        let mut p = LpProblem::boxed(vec![0.5, 0.5, 0.5, 0.1]);
        p.add_row(vec![1.0; 4], Relation::Eq, 2.0);
        let a = solve(&p).unwrap();
        let b = solve(&p).unwrap();
        assert_eq!(a.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.x.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}
