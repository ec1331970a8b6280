//! Output records. Column order follows field order; every file is a flat
//! table so CSV and JSON carry the same information.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use hap_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Per user and site: analytic mobility statistics, plus Monte-Carlo
/// estimates when a simulation was requested.
#[derive(Debug, Clone, Serialize)]
pub struct StationaryRow {
    pub user: usize,
    pub site_i: usize,
    pub site_j: usize,
    pub phi: f64,
    pub pi_s: f64,
    pub d_s: f64,
    pub d_d: f64,
    pub d_e: f64,
    pub tau_s: f64,
    pub tau_d: f64,
    pub tau_e: f64,
    pub phi_empirical: Option<f64>,
    pub pi_empirical: Option<f64>,
    pub phi_abs_err: Option<f64>,
    pub pi_abs_err: Option<f64>,
}

/// Per user and site: raw trace counters next to the analytic targets.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationRow {
    pub user: usize,
    pub seed: u64,
    pub site_i: usize,
    pub site_j: usize,
    pub visits: u64,
    pub complete_passes: u64,
    pub time_in_region: f64,
    pub time_in_wit: f64,
    pub time_in_wet: f64,
    pub phi_analytic: f64,
    pub phi_empirical: f64,
    pub pi_analytic: f64,
    pub pi_empirical: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverReport {
    pub scheme: String,
    pub solver: String,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: f64,
    pub objective: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub iterations: usize,
    pub lp_solves: usize,
    pub wall_time_ms: f64,
    /// Row-major `0`/`1` string, or space-separated fractional values for
    /// the bare relaxation.
    pub plan: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: f64,
    pub epsilon_max: f64,
    pub eta_i: f64,
    pub epsilon_i: f64,
    pub eta_e: f64,
    pub epsilon_e: f64,
    pub eta_b: f64,
    pub epsilon_b: f64,
    pub eta_s: f64,
    pub epsilon_s: f64,
    /// Total WIT dwell time over all users at the swept crossroad.
    pub site_tau_d: Option<f64>,
    /// Total WET dwell time over all users at the swept crossroad.
    pub site_tau_e: Option<f64>,
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_to<T: Serialize>(records: &[T], format: Format, sink: impl Write) -> std::result::Result<(), String> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(sink);
            for r in records {
                w.serialize(r).map_err(|e| e.to_string())?;
            }
            w.flush().map_err(|e| e.to_string())
        }
        Format::Json => {
            let mut sink = sink;
            serde_json::to_writer_pretty(&mut sink, records).map_err(|e| e.to_string())?;
            writeln!(sink).map_err(|e| e.to_string())
        }
    }
}

/// Writes `records` to `out`, or to stdout when `out` is `None`.
pub fn emit<T: Serialize>(records: &[T], format: Format, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let file = File::create(path).map_err(|e| io_error(path, e))?;
            write_to(records, format, io::BufWriter::new(file))
                .map_err(|e| io_error(path, io::Error::other(e)))
        }
        None => write_to(records, format, io::stdout().lock())
            .map_err(|e| io_error(Path::new("<stdout>"), io::Error::other(e))),
    }
}
