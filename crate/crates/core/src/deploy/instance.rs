use rayon::prelude::*;

use crate::error::Result;
use crate::metrics::{evaluate_plan, pass_energies, DeploymentPlan, EvaluatedPlan};
use crate::mobility::{analyze, wit_coefficients, MobilityAnalysis};
use crate::scenario::{GridScenario, Scenario};

/// Everything the deployment solvers need, precomputed once per scenario.
#[derive(Debug, Clone)]
pub struct PlanningInstance {
    pub grid: GridScenario,
    pub analyses: Vec<MobilityAnalysis>,
    /// `[user][site]` energy of one pass.
    pub pass_energies: Vec<Vec<f64>>,
    /// `[user][site]` energy over the horizon if an H-AP sits at the site:
    /// expected passes times energy per pass.
    pub energy_coeffs: Vec<Vec<f64>>,
    /// WIT coefficient `k` per site.
    pub wit_coeffs: Vec<f64>,
}

impl PlanningInstance {
    /// Analyzes every user (in parallel; results keep user order).
    pub fn build(scenario: &Scenario) -> Result<Self> {
        let grid = &scenario.grid;
        let analyses = scenario
            .users
            .par_iter()
            .map(|u| analyze(u, grid))
            .collect::<Result<Vec<_>>>()?;
        let pass_energies: Vec<Vec<f64>> = scenario.users.iter().map(|u| pass_energies(u, grid)).collect();
        Ok(Self::from_parts(grid.clone(), analyses, pass_energies))
    }

    pub fn from_parts(grid: GridScenario, analyses: Vec<MobilityAnalysis>, pass_energies: Vec<Vec<f64>>) -> Self {
        let energy_coeffs = analyses
            .iter()
            .zip(&pass_energies)
            .map(|(a, e)| (0..a.num_sites()).map(|k| a.pass_count(k) * e[k]).collect())
            .collect();
        let wit_coeffs = wit_coefficients(&analyses, grid.observation_time);
        PlanningInstance {
            grid,
            analyses,
            pass_energies,
            energy_coeffs,
            wit_coeffs,
        }
    }

    pub fn num_sites(&self) -> usize {
        self.grid.num_sites()
    }

    pub fn num_users(&self) -> usize {
        self.analyses.len()
    }

    pub fn battery_capacity(&self) -> f64 {
        self.grid.battery_capacity
    }

    pub fn plan(&self, sites: &[usize]) -> DeploymentPlan {
        DeploymentPlan::for_grid(&self.grid, sites)
    }

    pub fn evaluate(&self, plan: &DeploymentPlan) -> EvaluatedPlan {
        evaluate_plan(&self.analyses, &self.pass_energies, plan, &self.grid)
    }

    /// `sum k_s` over `sites`.
    pub fn eta_of(&self, sites: &[usize]) -> f64 {
        sites.iter().map(|&s| self.wit_coeffs[s]).sum()
    }

    /// Clamped total energy for the given sites (ascending order expected).
    pub fn epsilon_of(&self, sites: &[usize]) -> f64 {
        let q = self.battery_capacity();
        self.energy_coeffs
            .iter()
            .map(|row| sites.iter().map(|&s| row[s]).sum::<f64>().min(q))
            .sum()
    }

    /// Aggregate stationary visiting probability per site.
    pub fn visit_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.num_sites()];
        for a in &self.analyses {
            for (slot, p) in w.iter_mut().zip(&a.stationary) {
                *slot += p;
            }
        }
        w
    }
}
