//! Path loss, harvested energy per pass, and the WIT / WET efficiencies of a
//! deployment.

use crate::error::{Error, Result};
use crate::mobility::MobilityAnalysis;
use crate::quadrature::GaussLegendre;
use crate::scenario::{GridScenario, PathLossModel, Site, UserProfile};

/// `h0` inside the reference distance, `h0 (d0/d)^beta` beyond it.
pub fn path_loss(distance: f64, model: &PathLossModel) -> f64 {
    if distance <= model.ref_distance {
        model.ref_loss
    } else {
        model.ref_loss * (model.ref_distance / distance).powf(model.exponent)
    }
}

/// Radio-side constants of a WET pass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Radio {
    pub tx_power: f64,
    pub rectify_eff: f64,
    pub path_loss: PathLossModel,
}

impl Radio {
    pub fn of(grid: &GridScenario) -> Self {
        Radio {
            tx_power: grid.tx_power,
            rectify_eff: grid.rectify_eff,
            path_loss: grid.path_loss,
        }
    }
}

/// Geometry and speeds of one pass through a WET circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassGeometry {
    pub wet_range: f64,
    pub crowded: f64,
    pub crowd_speed: f64,
    pub base_speed: f64,
}

impl PassGeometry {
    pub fn of(user: &UserProfile, grid: &GridScenario, idx: usize) -> Self {
        PassGeometry {
            wet_range: grid.wet_range,
            crowded: grid.crowded_range[idx],
            crowd_speed: user.crowd_speed[idx],
            base_speed: user.base_speed,
        }
    }
}

/// Energy harvested in one diameter crossing of the WET circle, closed form.
///
/// The near-field disc of radius `d0` is always crossed at the crowd speed.
/// A crowded radius below `d0` therefore only changes the near-field term,
/// and the crowded radius is clamped up to `d0` before use.
pub fn pass_energy(geom: &PassGeometry, radio: &Radio) -> f64 {
    let PathLossModel {
        ref_distance: d0,
        ref_loss: h0,
        exponent: beta,
    } = radio.path_loss;
    let scale = 2.0 * radio.rectify_eff * radio.tx_power * h0 * d0 / (1.0 - beta);
    let wet_term = (geom.wet_range / d0).powf(1.0 - beta);
    let (vc, v0) = (geom.crowd_speed, geom.base_speed);
    if geom.wet_range <= geom.crowded {
        scale / vc * (wet_term - beta)
    } else {
        let crowded = geom.crowded.max(d0);
        let crowd_term = (crowded / d0).powf(1.0 - beta);
        scale * ((1.0 / vc - 1.0 / v0) * crowd_term + wet_term / v0 - beta / vc)
    }
}

/// Energy of one pass by direct quadrature of `P h(d) / v(d)` over the WET
/// radius plus the near-field dwell term, using `loss` as the attenuation
/// profile. `quad_points` is the total number of integrand evaluations
/// (rounded down to whole 8-point panels, at least 8 panels per piece).
pub fn pass_energy_quadrature(
    geom: &PassGeometry,
    radio: &Radio,
    quad_points: usize,
    loss: impl Fn(f64) -> f64,
) -> f64 {
    const ORDER: usize = 8;
    let gl = GaussLegendre::new(ORDER);
    let d0 = radio.path_loss.ref_distance;
    let h0 = radio.path_loss.ref_loss;
    let p = radio.tx_power;
    let (vc, v0, re, rc) = (geom.crowd_speed, geom.base_speed, geom.wet_range, geom.crowded);

    let mut pieces: Vec<(f64, f64, f64)> = Vec::new();
    if rc <= d0 {
        pieces.push((d0, re, v0));
    } else if rc >= re {
        pieces.push((d0, re, vc));
    } else {
        pieces.push((d0, rc, vc));
        pieces.push((rc, re, v0));
    }
    let panels = (quad_points / ORDER / pieces.len()).max(8);
    let far: f64 = pieces
        .iter()
        .map(|&(a, b, v)| gl.integrate_geometric(|d| p * loss(d) / v, a, b, panels))
        .sum();
    let near = p * h0 * d0 / vc;
    2.0 * radio.rectify_eff * (far + near)
}

pub fn energy_per_pass(user: &UserProfile, grid: &GridScenario, site: Site) -> Result<f64> {
    let idx = grid.index(site)?;
    Ok(pass_energy(&PassGeometry::of(user, grid, idx), &Radio::of(grid)))
}

pub fn energy_per_pass_numeric(user: &UserProfile, grid: &GridScenario, site: Site, quad_points: usize) -> Result<f64> {
    if quad_points < 64 {
        return Err(Error::validation("quadrature needs at least 64 points"));
    }
    let idx = grid.index(site)?;
    let radio = Radio::of(grid);
    Ok(pass_energy_quadrature(
        &PassGeometry::of(user, grid, idx),
        &radio,
        quad_points,
        |d| path_loss(d, &radio.path_loss),
    ))
}

/// Per-pass energy for every site, flattened order.
pub fn pass_energies(user: &UserProfile, grid: &GridScenario) -> Vec<f64> {
    let radio = Radio::of(grid);
    (0..grid.num_sites())
        .map(|idx| pass_energy(&PassGeometry::of(user, grid, idx), &radio))
        .collect()
}

/// Binary H-AP placement over the grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DeploymentPlan {
    pub x_i: usize,
    pub x_j: usize,
    y: Vec<bool>,
}

impl DeploymentPlan {
    pub fn empty(x_i: usize, x_j: usize) -> Self {
        DeploymentPlan {
            x_i,
            x_j,
            y: vec![false; x_i * x_j],
        }
    }

    pub fn full(x_i: usize, x_j: usize) -> Self {
        DeploymentPlan {
            x_i,
            x_j,
            y: vec![true; x_i * x_j],
        }
    }

    /// Plan deploying at the given 0-based flattened sites.
    pub fn from_indices(x_i: usize, x_j: usize, sites: &[usize]) -> Self {
        let mut plan = Self::empty(x_i, x_j);
        for &s in sites {
            plan.y[s] = true;
        }
        plan
    }

    pub fn for_grid(grid: &GridScenario, sites: &[usize]) -> Self {
        Self::from_indices(grid.x_i, grid.x_j, sites)
    }

    pub fn num_sites(&self) -> usize {
        self.y.len()
    }

    pub fn is_deployed(&self, idx: usize) -> bool {
        self.y[idx]
    }

    pub fn set(&mut self, idx: usize, on: bool) {
        self.y[idx] = on;
    }

    pub fn count(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }

    pub fn deployed(&self) -> impl Iterator<Item = usize> + '_ {
        self.y.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    /// Row-major `0`/`1` string.
    pub fn to_bit_string(&self) -> String {
        self.y.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(x_i: usize, x_j: usize, bits: &str) -> Result<Self> {
        let y: Vec<bool> = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse(format!("plan string has '{other}'"))),
            })
            .collect::<Result<_>>()?;
        if y.len() != x_i * x_j {
            return Err(Error::Parse(format!("plan string must have {} bits", x_i * x_j)));
        }
        Ok(DeploymentPlan { x_i, x_j, y })
    }

    /// Rows of `0`/`1` for display.
    pub fn grid_lines(&self) -> Vec<String> {
        self.to_bit_string()
            .as_bytes()
            .chunks(self.x_j)
            .map(|row| row.iter().map(|&b| (b as char).to_string()).collect::<Vec<_>>().join(" "))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluatedPlan {
    pub plan: DeploymentPlan,
    pub eta: f64,
    pub per_user_energy: Vec<f64>,
    pub epsilon: f64,
}

/// Fraction of all users' WIT opportunity covered by `plan`.
pub fn wit_efficiency(analyses: &[MobilityAnalysis], plan: &DeploymentPlan, observation_time: f64) -> f64 {
    let delivered: f64 = analyses
        .iter()
        .map(|a| plan.deployed().map(|k| a.total_wit[k]).sum::<f64>())
        .sum();
    delivered / (analyses.len() as f64 * observation_time)
}

/// Energy a user harvests over the horizon from the deployed H-APs, before
/// the battery clamp.
pub fn user_energy(analysis: &MobilityAnalysis, energies_per_pass: &[f64], plan: &DeploymentPlan) -> f64 {
    plan.deployed()
        .map(|k| analysis.pass_count(k) * energies_per_pass[k])
        .sum()
}

/// Total stored energy: each user's harvest clamped at the battery capacity.
pub fn wet_efficiency(per_user: &[f64], battery_capacity: f64) -> f64 {
    per_user.iter().map(|e| e.min(battery_capacity)).sum()
}

pub fn evaluate_plan(
    analyses: &[MobilityAnalysis],
    energies_per_pass: &[Vec<f64>],
    plan: &DeploymentPlan,
    grid: &GridScenario,
) -> EvaluatedPlan {
    let per_user_energy: Vec<f64> = analyses
        .iter()
        .zip(energies_per_pass)
        .map(|(a, e)| user_energy(a, e, plan))
        .collect();
    EvaluatedPlan {
        plan: plan.clone(),
        eta: wit_efficiency(analyses, plan, grid.observation_time),
        epsilon: wet_efficiency(&per_user_energy, grid.battery_capacity),
        per_user_energy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mobility::analyze;
    use crate::scenario::tests::grid;

    const H0: f64 = 0.003;

    fn radio(beta: f64) -> Radio {
        Radio {
            tx_power: 1.0,
            rectify_eff: 0.8,
            path_loss: PathLossModel {
                ref_distance: 1.0,
                ref_loss: H0,
                exponent: beta,
            },
        }
    }

    fn quad(geom: &PassGeometry, r: &Radio, points: usize) -> f64 {
        pass_energy_quadrature(geom, r, points, |d| path_loss(d, &r.path_loss))
    }

    #[test]
    fn path_loss_examples() {
        let m = radio(2.0).path_loss;
        assert_eq!(path_loss(1.0, &m), H0);
        assert_eq!(path_loss(0.0, &m), H0);
        assert!((path_loss(10.0, &m) - 3e-5).abs() < 1e-18);
        assert!(path_loss(20.0, &m) < path_loss(10.0, &m));
    }

    #[test]
    fn closed_form_matches_quadrature_split_case() {
        let g = PassGeometry {
            wet_range: 10.0,
            crowded: 5.0,
            crowd_speed: 1.0,
            base_speed: 2.0,
        };
        let r = radio(2.0);
        let closed = pass_energy(&g, &r);
        let numeric = quad(&g, &r, 256);
        assert!(((closed - numeric) / numeric).abs() < 1e-6);
        // Hand evaluation of the split branch for beta = 2, d0 = 1.
        let hand = 2.0 * 0.8 * H0 / (-1.0) * ((1.0 - 0.5) * 0.2 + 0.5 * 0.1 - 2.0);
        assert!((closed - hand).abs() < 1e-15);
    }

    #[test]
    fn wet_range_at_reference_distance_is_near_field_only() {
        let g = PassGeometry {
            wet_range: 1.0,
            crowded: 5.0,
            crowd_speed: 1.5,
            base_speed: 2.0,
        };
        let r = radio(3.0);
        let expected = 2.0 * 0.8 * 1.0 * H0 * 1.0 / 1.5;
        assert!((pass_energy(&g, &r) - expected).abs() < 1e-15);
    }

    #[test]
    fn equal_speeds_collapse_branches() {
        let r = radio(3.0);
        let inside = PassGeometry {
            wet_range: 10.0,
            crowded: 20.0,
            crowd_speed: 2.0,
            base_speed: 2.0,
        };
        let outside = PassGeometry { crowded: 4.0, ..inside };
        assert!((pass_energy(&inside, &r) - pass_energy(&outside, &r)).abs() < 1e-15);
    }

    #[test]
    fn continuous_at_crowd_equal_wet_range() {
        let r = radio(4.0);
        let at = PassGeometry {
            wet_range: 10.0,
            crowded: 10.0,
            crowd_speed: 0.7,
            base_speed: 1.9,
        };
        let below = PassGeometry { crowded: 10.0 - 1e-9, ..at };
        assert!((pass_energy(&at, &r) - pass_energy(&below, &r)).abs() < 1e-12);
    }

    #[test]
    fn constant_integrand_hook() {
        let r = radio(3.0);
        let g = PassGeometry {
            wet_range: 10.0,
            crowded: 4.0,
            crowd_speed: 1.0,
            base_speed: 1.0,
        };
        let v = pass_energy_quadrature(&g, &r, 64, |_| H0);
        let expected = 2.0 * 0.8 * (H0 * (10.0 - 1.0) + H0 * 1.0);
        assert!((v - expected).abs() < 1e-14);
    }

    #[test]
    fn quadrature_converges() {
        let r = radio(4.0);
        let g = PassGeometry {
            wet_range: 10.0,
            crowded: 3.0,
            crowd_speed: 0.4,
            base_speed: 1.7,
        };
        let a = quad(&g, &r, 128);
        let b = quad(&g, &r, 256);
        assert!(((a - b) / b).abs() < 1e-9);
    }

    #[test]
    fn numeric_rejects_few_points() {
        let g = grid(2, 2);
        let u = UserProfile::uniform(1, &g, 2.0, 1.0);
        assert!(energy_per_pass_numeric(&u, &g, Site::new(1, 1), 32).is_err());
        let closed = energy_per_pass(&u, &g, Site::new(1, 1)).unwrap();
        let numeric = energy_per_pass_numeric(&u, &g, Site::new(1, 1), 128).unwrap();
        assert!(((closed - numeric) / numeric).abs() < 1e-6);
    }

    #[test]
    fn efficiency_edge_cases() {
        let g = grid(2, 2);
        let u = UserProfile::uniform(1, &g, 2.0, 1.0);
        let a = analyze(&u, &g).unwrap();
        let e = pass_energies(&u, &g);
        let none = evaluate_plan(std::slice::from_ref(&a), &[e.clone()], &DeploymentPlan::empty(2, 2), &g);
        assert_eq!((none.eta, none.epsilon), (0.0, 0.0));
        assert_eq!(none.per_user_energy, vec![0.0]);

        let all = evaluate_plan(std::slice::from_ref(&a), &[e], &DeploymentPlan::full(2, 2), &g);
        let k_sum: f64 = a.total_wit.iter().sum::<f64>() / g.observation_time;
        assert!((all.eta - k_sum).abs() < 1e-12);
    }

    #[test]
    fn battery_clamp() {
        assert_eq!(wet_efficiency(&[2.0, 2.0, 2.0], 1.0), 3.0);
        assert_eq!(wet_efficiency(&[0.25, 2.0], 1.0), 1.25);
    }

    #[test]
    fn single_site_share() {
        let g = grid(1, 1);
        let u = UserProfile::uniform(1, &g, 2.0, 1.0);
        let mut a = analyze(&u, &g).unwrap();
        a.total_wit = vec![0.2 * g.observation_time];
        let eta = wit_efficiency(&[a], &DeploymentPlan::full(1, 1), g.observation_time);
        assert!((eta - 0.2).abs() < 1e-15);
    }

    #[test]
    fn plan_strings() {
        let p = DeploymentPlan::from_indices(2, 3, &[0, 4]);
        assert_eq!(p.to_bit_string(), "100010");
        assert_eq!(p.grid_lines(), vec!["1 0 0", "0 1 0"]);
        assert_eq!(DeploymentPlan::from_bit_string(2, 3, "100010").unwrap(), p);
        assert!(DeploymentPlan::from_bit_string(2, 3, "10001").is_err());
        assert!(DeploymentPlan::from_bit_string(2, 3, "10001x").is_err());
    }
}
