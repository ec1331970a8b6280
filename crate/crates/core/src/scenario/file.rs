//! JSON scenario documents.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{uniform_turns, GridScenario, PathLossModel, Scenario, Site, UserProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    /// Free-form provenance text; ignored by the loader.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub grid: GridSection,
    pub ranges: RangesSection,
    pub physics: PhysicsSection,
    pub users: Vec<UserSection>,
    pub problem: ProblemSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_i: usize,
    pub x_j: usize,
    pub street_length: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangesSection {
    pub wit: f64,
    pub wet: f64,
    pub crowded: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub tx_power: f64,
    #[serde(default = "default_rectify_eff")]
    pub rectify_eff: f64,
    pub ref_distance: f64,
    pub ref_loss: f64,
    pub exponent: f64,
}

fn default_rectify_eff() -> f64 {
    0.8
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserSection {
    pub id: usize,
    pub base_speed: f64,
    pub crowd_speed: Vec<Vec<f64>>,
    #[serde(default)]
    pub turn_prob: Vec<TurnEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnEntry {
    pub from: [usize; 2],
    pub to: [usize; 2],
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub budget: usize,
    pub alpha: f64,
    pub battery_capacity: f64,
    pub observation_time: f64,
    #[serde(default)]
    pub download_rate: f64,
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_scenario()
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario> {
        let (x_i, x_j) = (self.grid.x_i, self.grid.x_j);
        let crowded_range = flatten_matrix(&self.ranges.crowded, x_i, x_j, "ranges.crowded")?;
        let grid = GridScenario {
            x_i,
            x_j,
            street_length: self.grid.street_length,
            wit_range: self.ranges.wit,
            wet_range: self.ranges.wet,
            crowded_range,
            tx_power: self.physics.tx_power,
            rectify_eff: self.physics.rectify_eff,
            battery_capacity: self.problem.battery_capacity,
            observation_time: self.problem.observation_time,
            alpha: self.problem.alpha,
            budget: self.problem.budget,
            download_rate: self.problem.download_rate,
            path_loss: PathLossModel {
                ref_distance: self.physics.ref_distance,
                ref_loss: self.physics.ref_loss,
                exponent: self.physics.exponent,
            },
        };
        // Shape checks below index the grid, so validate it first.
        grid.validate()?;
        let users = self
            .users
            .iter()
            .map(|u| user_from_section(u, &grid))
            .collect::<Result<Vec<_>>>()?;
        Scenario::new(grid, users)
    }

    pub fn from_scenario(scenario: &Scenario, notes: Option<String>) -> Self {
        let g = &scenario.grid;
        let users = scenario
            .users
            .iter()
            .map(|u| {
                let mut turn_prob = Vec::new();
                for idx in 0..g.num_sites() {
                    let from = g.site(idx);
                    for (dir, nb) in g.neighbor_indices(idx) {
                        let to = g.site(nb);
                        turn_prob.push(TurnEntry {
                            from: [from.i, from.j],
                            to: [to.i, to.j],
                            p: u.turn(idx, dir),
                        });
                    }
                }
                UserSection {
                    id: u.id,
                    base_speed: u.base_speed,
                    crowd_speed: nest(&u.crowd_speed, g.x_j),
                    turn_prob,
                }
            })
            .collect();
        ScenarioFile {
            notes,
            grid: GridSection {
                x_i: g.x_i,
                x_j: g.x_j,
                street_length: g.street_length,
            },
            ranges: RangesSection {
                wit: g.wit_range,
                wet: g.wet_range,
                crowded: nest(&g.crowded_range, g.x_j),
            },
            physics: PhysicsSection {
                tx_power: g.tx_power,
                rectify_eff: g.rectify_eff,
                ref_distance: g.path_loss.ref_distance,
                ref_loss: g.path_loss.ref_loss,
                exponent: g.path_loss.exponent,
            },
            users,
            problem: ProblemSection {
                budget: g.budget,
                alpha: g.alpha,
                battery_capacity: g.battery_capacity,
                observation_time: g.observation_time,
                download_rate: g.download_rate,
            },
        }
    }
}

fn nest(flat: &[f64], x_j: usize) -> Vec<Vec<f64>> {
    flat.chunks(x_j).map(<[f64]>::to_vec).collect()
}

fn flatten_matrix(rows: &[Vec<f64>], x_i: usize, x_j: usize, what: &str) -> Result<Vec<f64>> {
    if rows.len() != x_i || rows.iter().any(|r| r.len() != x_j) {
        return Err(Error::Parse(format!("{what} must be a {x_i}x{x_j} matrix")));
    }
    Ok(rows.concat())
}

fn user_from_section(sec: &UserSection, grid: &GridScenario) -> Result<UserProfile> {
    let what = format!("users[id={}].crowd_speed", sec.id);
    let crowd_speed = flatten_matrix(&sec.crowd_speed, grid.x_i, grid.x_j, &what)?;
    let n = grid.num_sites();
    let mut table: Vec<Option<[f64; 4]>> = vec![None; n];
    for entry in &sec.turn_prob {
        let from = Site::new(entry.from[0], entry.from[1]);
        let to = Site::new(entry.to[0], entry.to[1]);
        let from_idx = grid.index(from).map_err(|_| {
            Error::validation(format!("user {}: turn entry from {from} is off the grid", sec.id))
        })?;
        let to_idx = grid.index(to).map_err(|_| {
            Error::validation(format!("user {}: turn entry to {to} is off the grid", sec.id))
        })?;
        let dir = grid
            .neighbor_indices(from_idx)
            .find(|&(_, nb)| nb == to_idx)
            .map(|(d, _)| d)
            .ok_or_else(|| {
                Error::validation(format!(
                    "user {}: {to} is not a neighbor of {from}",
                    sec.id
                ))
            })?;
        let row = table[from_idx].get_or_insert([0.0; 4]);
        if row[dir.slot()] != 0.0 {
            return Err(Error::validation(format!(
                "user {}: duplicate turn entry {from} -> {to}",
                sec.id
            )));
        }
        row[dir.slot()] = entry.p;
    }
    let turn_prob = table
        .into_iter()
        .enumerate()
        .map(|(idx, row)| row.unwrap_or_else(|| uniform_turns(grid, idx)))
        .collect();
    Ok(UserProfile {
        id: sec.id,
        base_speed: sec.base_speed,
        crowd_speed,
        turn_prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(wet: f64, crowd00: f64, turns: &str) -> String {
        format!(
            r#"{{
  "grid": {{"x_i": 2, "x_j": 2, "street_length": 200}},
  "ranges": {{"wit": 50, "wet": {wet}, "crowded": [[{crowd00}, 20], [30, 40]]}},
  "physics": {{"tx_power": 1, "rectify_eff": 0.8, "ref_distance": 1, "ref_loss": 0.003, "exponent": 3}},
  "users": [{{"id": 1, "base_speed": 2.0, "crowd_speed": [[1, 1], [1, 0.5]], "turn_prob": [{turns}]}}],
  "problem": {{"budget": 2, "alpha": 0.97, "battery_capacity": 1, "observation_time": 36000, "download_rate": 1e6}}
}}"#
        )
    }

    #[test]
    fn omitted_turns_default_to_uniform() {
        let s = parse_scenario(&doc(10.0, 10.0, "")).unwrap();
        assert_eq!(s.users[0].turn_prob[0], [0.0, 0.5, 0.0, 0.5]);
        assert_eq!(s.grid.crowded_range, vec![10.0, 20.0, 30.0, 40.0]);
        assert_eq!(s.users[0].crowd_speed[3], 0.5);
    }

    #[test]
    fn explicit_turns_are_placed_by_direction() {
        let turns = r#"{"from": [1,1], "to": [1,2], "p": 0.3}, {"from": [1,1], "to": [2,1], "p": 0.7}"#;
        let s = parse_scenario(&doc(10.0, 10.0, turns)).unwrap();
        let row = s.users[0].turn_prob[0];
        assert_eq!(row[super::super::Direction::Right.slot()], 0.3);
        assert_eq!(row[super::super::Direction::Down.slot()], 0.7);
    }

    #[test]
    fn partial_rows_must_normalize() {
        let turns = r#"{"from": [1,1], "to": [1,2], "p": 0.3}"#;
        assert!(matches!(
            parse_scenario(&doc(10.0, 10.0, turns)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn non_neighbor_turn_rejected() {
        let turns = r#"{"from": [1,1], "to": [2,2], "p": 1.0}"#;
        let err = parse_scenario(&doc(10.0, 10.0, turns)).unwrap_err().to_string();
        assert!(err.contains("not a neighbor"), "{err}");
    }

    #[test]
    fn invariant_violations_are_named() {
        let err = parse_scenario(&doc(60.0, 10.0, "")).unwrap_err().to_string();
        assert!(err.contains("r^E < r^D violated"), "{err}");
        let err = parse_scenario(&doc(10.0, 120.0, "")).unwrap_err().to_string();
        assert!(err.contains("l > 2*max"), "{err}");
    }

    #[test]
    fn malformed_documents_are_parse_errors() {
        assert!(matches!(parse_scenario("{"), Err(Error::Parse(_))));
        let missing_beta = doc(10.0, 10.0, "").replace(r#", "exponent": 3"#, "");
        assert!(matches!(parse_scenario(&missing_beta), Err(Error::Parse(_))));
        let bad_shape = doc(10.0, 10.0, "").replace("[[10, 20], [30, 40]]", "[[10, 20]]");
        assert!(matches!(parse_scenario(&bad_shape), Err(Error::Parse(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_scenario("/definitely/not/here.json"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let s = parse_scenario(&doc(10.0, 10.0, "")).unwrap();
        let text = serde_json::to_string(&ScenarioFile::from_scenario(&s, None)).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }
}
