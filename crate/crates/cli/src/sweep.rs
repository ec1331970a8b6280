use std::fmt;
use std::str::FromStr;

use hap_core::{Error, GridScenario, Result, Site};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepParam {
    Budget,
    Alpha,
    CrowdedRange(Site),
    WitRange,
    WetRange,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepParam::Budget => f.write_str("K"),
            SweepParam::Alpha => f.write_str("alpha"),
            SweepParam::CrowdedRange(s) => write!(f, "crowded_range@{},{}", s.i, s.j),
            SweepParam::WitRange => f.write_str("wit_range"),
            SweepParam::WetRange => f.write_str("wet_range"),
        }
    }
}

/// `PARAM:START:END:STEPS`, with `STEPS` evenly spaced points including both
/// ends.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

fn parse_site(text: &str) -> Option<Site> {
    let (i, j) = text.split_once(',')?;
    Some(Site::new(i.trim().parse().ok()?, j.trim().parse().ok()?))
}

impl FromStr for SweepSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [name, start, end, steps] = parts[..] else {
            return Err(format!("expected PARAM:START:END:STEPS, got '{s}'"));
        };
        let param = match name {
            "K" | "k" | "budget" => SweepParam::Budget,
            "alpha" => SweepParam::Alpha,
            "wit_range" | "r_D" => SweepParam::WitRange,
            "wet_range" | "r_E" => SweepParam::WetRange,
            other => match other.strip_prefix("crowded_range@").and_then(parse_site) {
                Some(site) => SweepParam::CrowdedRange(site),
                None => {
                    return Err(format!(
                        "unknown sweep parameter '{other}' (K, alpha, wit_range, wet_range, crowded_range@I,J)"
                    ))
                }
            },
        };
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number '{t}' in sweep"));
        let steps: usize = steps.parse().map_err(|_| format!("bad step count '{steps}'"))?;
        if steps == 0 {
            return Err("sweep needs at least one step".into());
        }
        Ok(SweepSpec {
            param,
            start: num(start)?,
            end: num(end)?,
            steps,
        })
    }
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.start];
        }
        let span = self.end - self.start;
        (0..self.steps)
            .map(|t| self.start + span * t as f64 / (self.steps - 1) as f64)
            .collect()
    }

    /// Integer budget at a sweep point; fails on non-integral values.
    pub fn budget_at(&self, value: f64) -> Result<usize> {
        if value < 0.0 || value.fract() != 0.0 {
            return Err(Error::Validation(format!("budget sweep point {value} is not a non-negative integer")));
        }
        Ok(value as usize)
    }

    /// Returns a copy of `grid` with the swept geometry applied and checked.
    pub fn apply(&self, grid: &GridScenario, value: f64) -> Result<GridScenario> {
        let mut g = grid.clone();
        match self.param {
            SweepParam::CrowdedRange(site) => {
                let idx = g.index(site)?;
                g.crowded_range[idx] = value;
            }
            SweepParam::WitRange => g.wit_range = value,
            SweepParam::WetRange => g.wet_range = value,
            SweepParam::Budget | SweepParam::Alpha => {}
        }
        g.validate().map_err(|e| match e {
            Error::Validation(msg) => Error::Validation(format!("sweep point {}={value}: {msg}", self.param)),
            other => other,
        })?;
        Ok(g)
    }

    pub fn site(&self) -> Option<Site> {
        match self.param {
            SweepParam::CrowdedRange(s) => Some(s),
            _ => None,
        }
    }
}
