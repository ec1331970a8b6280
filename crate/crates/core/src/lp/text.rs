//! Plain-text LP dump used for debugging and test fixtures.
//!
//! ```text
//! # comment
//! max 1 1
//! lower 0 0
//! upper 1 inf
//! 1 1 = 1
//! 1 -1 <= 0.5
//! ```
//!
//! `max`, `lower` and `upper` lines carry one value per variable; each
//! remaining line is a row `coeffs... REL rhs` with REL one of `<=`, `=`,
//! `>=`. Missing `lower`/`upper` lines default to 0 and +inf.

use std::fmt::Write as _;

use super::{LpProblem, Relation, Row};
use crate::error::{Error, Result};

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| fmt_num(v)).collect::<Vec<_>>().join(" ")
}

impl LpProblem {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "max {}", join(&self.objective)).unwrap();
        writeln!(out, "lower {}", join(&self.lower)).unwrap();
        writeln!(out, "upper {}", join(&self.upper)).unwrap();
        for r in &self.rows {
            writeln!(out, "{} {} {}", join(&r.coeffs), r.relation.symbol(), fmt_num(r.rhs)).unwrap();
        }
        out
    }
}

fn parse_num(tok: &str) -> Result<f64> {
    match tok {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => tok
            .parse()
            .map_err(|_| Error::Parse(format!("bad number '{tok}' in LP text"))),
    }
}

fn parse_nums<'a>(toks: impl Iterator<Item = &'a str>) -> Result<Vec<f64>> {
    toks.map(parse_num).collect()
}

pub fn parse_lp_text(text: &str) -> Result<LpProblem> {
    let mut objective = None;
    let mut lower = None;
    let mut upper = None;
    let mut rows = Vec::new();
    for line in text.lines().map(str::trim) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let head = toks.clone().next().unwrap();
        match head {
            "max" => objective = Some(parse_nums(toks.skip(1))?),
            "lower" => lower = Some(parse_nums(toks.skip(1))?),
            "upper" => upper = Some(parse_nums(toks.skip(1))?),
            _ => {
                let all: Vec<&str> = toks.by_ref().collect();
                let rel_pos = all
                    .iter()
                    .position(|t| matches!(*t, "<=" | "=" | ">="))
                    .ok_or_else(|| Error::Parse(format!("row without relation: '{line}'")))?;
                if rel_pos + 2 != all.len() {
                    return Err(Error::Parse(format!("row must end with 'REL rhs': '{line}'")));
                }
                let relation = match all[rel_pos] {
                    "<=" => Relation::Le,
                    ">=" => Relation::Ge,
                    _ => Relation::Eq,
                };
                rows.push(Row {
                    coeffs: parse_nums(all[..rel_pos].iter().copied())?,
                    relation,
                    rhs: parse_num(all[rel_pos + 1])?,
                });
            }
        }
    }
    let objective = objective.ok_or_else(|| Error::Parse("LP text has no 'max' line".into()))?;
    let n = objective.len();
    let p = LpProblem {
        lower: lower.unwrap_or_else(|| vec![0.0; n]),
        upper: upper.unwrap_or_else(|| vec![f64::INFINITY; n]),
        objective,
        rows,
    };
    p.validate()?;
    Ok(p)
}
