//! `hap-planner`: validate scenarios, inspect the mobility model, run the
//! Monte-Carlo walker, solve deployment problems and sweep parameters.

mod report;
mod sweep;

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use hap_core::deploy::{
    compute_epsilon_max, solve, solve_relaxation, solve_s_baseline, DeploymentProblem, PlanningInstance, Scheme,
    SolveOutcome, Solver, DEFAULT_CANDIDATE_CAP,
};
use hap_core::metrics::wet_efficiency;
use hap_core::scenario::{GeneratorConfig, ScenarioFile};
use hap_core::sim::{empirical_distributions, simulate_population, SimOptions};
use hap_core::{analyze, load_scenario, Error, Result, Scenario};

use report::{emit, Format, SimulationRow, SolverReport, StationaryRow, SweepRow};
use sweep::{SweepParam, SweepSpec};

#[derive(Parser, Debug)]
#[command(name = "hap-planner", version, about = "Hybrid access point deployment planner for grid streets")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "HAP_PLANNER_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Output {
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    #[value(name = "I", alias = "i")]
    I,
    #[value(name = "E", alias = "e")]
    E,
    #[value(name = "B", alias = "b")]
    B,
    /// Visit-frequency baseline.
    #[value(name = "S", alias = "s")]
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverArg {
    Exhaustive,
    Greedy,
    Lp,
    Bnb,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Exhaustive => Solver::Exhaustive,
            SolverArg::Greedy => Solver::Greedy,
            SolverArg::Lp => Solver::Lp,
            SolverArg::Bnb => Solver::Bnb,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check every model invariant and the ergodicity of each user's chain.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Per-site stationary probabilities, sojourn times and dwell times.
    Stationary {
        #[arg(long)]
        scenario: PathBuf,
        /// Restrict to one user id.
        #[arg(long)]
        user: Option<usize>,
        /// Add Monte-Carlo estimates and their absolute errors.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 1e6)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Run the Monte-Carlo walker and report raw counters.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        user: Option<usize>,
        #[arg(long, default_value_t = 1e6)]
        horizon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
    /// Solve one deployment problem.
    Deploy {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = SchemeArg::I)]
        scheme: SchemeArg,
        #[arg(long, value_enum, default_value_t = SolverArg::Exhaustive)]
        solver: SolverArg,
        /// Preference weight for scheme B (scenario value when omitted).
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of H-APs (scenario value when omitted).
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Solve all schemes and the baseline at each point of a parameter sweep.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// PARAM:START:END:STEPS with PARAM one of K, alpha, wit_range,
        /// wet_range, crowded_range@I,J.
        #[arg(long)]
        sweep: SweepSpec,
        #[arg(long, value_enum, default_value_t = SolverArg::Exhaustive)]
        solver: SolverArg,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        budget: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Write a randomized scenario with the default 5x5 parameter table.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        users: Option<usize>,
        /// Grid side length (square grid).
        #[arg(long)]
        size: Option<usize>,
        #[arg(long)]
        budget: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation(_) | Error::Parse(_) | Error::Index(_) | Error::NotErgodic { .. } => 2,
        Error::Io { .. } => 3,
        Error::Infeasible(_) | Error::RelaxationInfeasible => 4,
        Error::TooLarge { .. } => 5,
        Error::SchemeMismatch { .. } => 6,
        Error::EmptyTrace | Error::CycleDetected(_) | Error::InvalidLp(_) => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            warn!("could not size thread pool: {e}");
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { scenario } => cmd_validate(&scenario),
        Command::Stationary {
            scenario,
            user,
            simulate,
            horizon,
            seed,
            output,
        } => cmd_stationary(&scenario, user, simulate.then_some((horizon, seed)), &output),
        Command::Simulate {
            scenario,
            user,
            horizon,
            seed,
            output,
        } => cmd_simulate(&scenario, user, horizon, seed, &output),
        Command::Deploy {
            scenario,
            scheme,
            solver,
            alpha,
            budget,
            output,
        } => cmd_deploy(&scenario, scheme, solver, alpha, budget, &output),
        Command::Sweep {
            scenario,
            sweep,
            solver,
            alpha,
            budget,
            output,
        } => cmd_sweep(&scenario, &sweep, solver.into(), alpha, budget, &output),
        Command::Generate {
            seed,
            users,
            size,
            budget,
            out,
        } => cmd_generate(seed, users, size, budget, out.as_deref()),
    }
}

fn cmd_validate(path: &Path) -> Result<()> {
    let scenario = load_scenario(path)?;
    for user in &scenario.users {
        analyze(user, &scenario.grid)?;
    }
    let g = &scenario.grid;
    println!(
        "scenario OK: {}x{} grid, {} users, K={}, alpha={}, every mobility chain irreducible",
        g.x_i,
        g.x_j,
        scenario.num_users(),
        g.budget,
        g.alpha
    );
    Ok(())
}

fn select_users(scenario: &Scenario, user: Option<usize>) -> Result<Vec<hap_core::UserProfile>> {
    match user {
        None => Ok(scenario.users.clone()),
        Some(id) => scenario
            .users
            .iter()
            .find(|u| u.id == id)
            .cloned()
            .map(|u| vec![u])
            .ok_or_else(|| Error::Index(format!("no user with id {id}"))),
    }
}

fn cmd_stationary(path: &Path, user: Option<usize>, sim: Option<(f64, u64)>, out: &Output) -> Result<()> {
    let scenario = load_scenario(path)?;
    let grid = &scenario.grid;
    let users = select_users(&scenario, user)?;
    let traces = match sim {
        Some((horizon, seed)) => Some(simulate_population(&users, grid, horizon, seed, SimOptions::default())?),
        None => None,
    };
    let mut rows = Vec::new();
    for (u, profile) in users.iter().enumerate() {
        let a = analyze(profile, grid)?;
        let empirical = match &traces {
            Some(t) => Some(empirical_distributions(&t[u])?),
            None => None,
        };
        for idx in 0..grid.num_sites() {
            let site = grid.site(idx);
            let (phi_e, pi_e) = match &empirical {
                Some((f, o)) => (Some(f[idx]), Some(o[idx])),
                None => (None, None),
            };
            rows.push(StationaryRow {
                user: profile.id,
                site_i: site.i,
                site_j: site.j,
                phi: a.stationary[idx],
                pi_s: a.sojourn_dist[idx],
                d_s: a.region_sojourn[idx],
                d_d: a.wit_sojourn[idx],
                d_e: a.wet_sojourn[idx],
                tau_s: a.total_region[idx],
                tau_d: a.total_wit[idx],
                tau_e: a.total_wet[idx],
                phi_empirical: phi_e,
                pi_empirical: pi_e,
                phi_abs_err: phi_e.map(|v| (v - a.stationary[idx]).abs()),
                pi_abs_err: pi_e.map(|v| (v - a.sojourn_dist[idx]).abs()),
            });
        }
    }
    emit(&rows, out.format, out.out.as_deref())
}

fn cmd_simulate(path: &Path, user: Option<usize>, horizon: f64, seed: u64, out: &Output) -> Result<()> {
    let scenario = load_scenario(path)?;
    let grid = &scenario.grid;
    let users = select_users(&scenario, user)?;
    let traces = simulate_population(&users, grid, horizon, seed, SimOptions::default())?;
    let mut rows = Vec::new();
    for (profile, trace) in users.iter().zip(&traces) {
        let a = analyze(profile, grid)?;
        let (freq, occ) = empirical_distributions(trace)?;
        info!("user {}: {} transitions in {:.0} s", profile.id, trace.transitions, trace.elapsed);
        for idx in 0..grid.num_sites() {
            let site = grid.site(idx);
            rows.push(SimulationRow {
                user: profile.id,
                seed,
                site_i: site.i,
                site_j: site.j,
                visits: trace.visits[idx],
                complete_passes: trace.complete_passes[idx],
                time_in_region: trace.time_in_region[idx],
                time_in_wit: trace.time_in_wit[idx],
                time_in_wet: trace.time_in_wet[idx],
                phi_analytic: a.stationary[idx],
                phi_empirical: freq[idx],
                pi_analytic: a.sojourn_dist[idx],
                pi_empirical: occ[idx],
                abs_err: (freq[idx] - a.stationary[idx])
                    .abs()
                    .max((occ[idx] - a.sojourn_dist[idx]).abs()),
            });
        }
    }
    emit(&rows, out.format, out.out.as_deref())
}

fn solver_report(scheme: &str, solver: &str, k: usize, alpha: f64, o: &SolveOutcome) -> SolverReport {
    SolverReport {
        scheme: scheme.to_string(),
        solver: solver.to_string(),
        k,
        alpha,
        objective: o.objective,
        eta: o.evaluated.eta,
        epsilon: o.evaluated.epsilon,
        iterations: o.iterations,
        lp_solves: o.lp_solves,
        wall_time_ms: o.elapsed.as_secs_f64() * 1e3,
        plan: o.evaluated.plan.to_bit_string(),
    }
}

fn problem_for<'a>(inst: &'a PlanningInstance, scheme: Scheme, k: usize, alpha: f64, eps_max: f64) -> DeploymentProblem<'a> {
    match scheme {
        Scheme::I => DeploymentProblem::i(inst, k),
        Scheme::E => DeploymentProblem::e(inst, k),
        Scheme::B => DeploymentProblem::b_with(inst, k, alpha, eps_max),
    }
}

/// Fractional relaxation optimum, scored with the relaxed indicators.
fn relaxation_report(inst: &PlanningInstance, problem: &DeploymentProblem<'_>, alpha: f64) -> Result<SolverReport> {
    let start = Instant::now();
    let relaxed = solve_relaxation(problem)?;
    let eta: f64 = relaxed.y.iter().zip(&inst.wit_coeffs).map(|(y, k)| y * k).sum();
    let per_user: Vec<f64> = inst
        .energy_coeffs
        .iter()
        .map(|row| row.iter().zip(&relaxed.y).map(|(a, y)| a * y).sum())
        .collect();
    Ok(SolverReport {
        scheme: problem.scheme.to_string(),
        solver: Solver::Lp.to_string(),
        k: problem.k,
        alpha,
        objective: relaxed.objective,
        eta,
        epsilon: wet_efficiency(&per_user, inst.battery_capacity()),
        iterations: relaxed.simplex_iterations,
        lp_solves: 1,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        plan: relaxed.y.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(" "),
    })
}

fn cmd_deploy(
    path: &Path,
    scheme: SchemeArg,
    solver: SolverArg,
    alpha: Option<f64>,
    budget: Option<usize>,
    out: &Output,
) -> Result<()> {
    let scenario = load_scenario(path)?;
    let inst = PlanningInstance::build(&scenario)?;
    let k = budget.unwrap_or(scenario.grid.budget);
    let alpha = alpha.unwrap_or(scenario.grid.alpha);

    let report = match scheme {
        SchemeArg::S => {
            let start = Instant::now();
            let mut o = solve_s_baseline(&inst, k)?;
            o.elapsed = start.elapsed();
            solver_report("S", "visit-frequency", k, alpha, &o)
        }
        _ => {
            let scheme = match scheme {
                SchemeArg::I => Scheme::I,
                SchemeArg::E => Scheme::E,
                _ => Scheme::B,
            };
            if solver == SolverArg::Greedy && scheme != Scheme::I {
                return Err(Error::SchemeMismatch {
                    solver: "greedy".into(),
                    scheme: scheme.to_string(),
                });
            }
            let eps_max = if scheme == Scheme::B {
                if !(0.0..=1.0).contains(&alpha) {
                    return Err(Error::Validation("B scheme needs 0 <= alpha <= 1".into()));
                }
                compute_epsilon_max(&inst, k, DEFAULT_CANDIDATE_CAP)?
            } else {
                0.0
            };
            let problem = problem_for(&inst, scheme, k, alpha, eps_max);
            if solver == SolverArg::Lp {
                relaxation_report(&inst, &problem, alpha)?
            } else {
                let o = solve(&problem, solver.into())?;
                solver_report(&scheme.to_string(), &Solver::from(solver).to_string(), k, alpha, &o)
            }
        }
    };

    if solver != SolverArg::Lp || scheme == SchemeArg::S {
        let deployed = report.plan.chars().filter(|&c| c == '1').count();
        let status = if deployed == k { "budget satisfied" } else { "budget VIOLATED" };
        eprintln!("{status}: {deployed} of {k} H-APs placed");
        for line in report.plan.as_bytes().chunks(scenario.grid.x_j) {
            let cells: Vec<String> = line.iter().map(|&b| (b as char).to_string()).collect();
            eprintln!("  {}", cells.join(" "));
        }
    }
    emit(&[report], out.format, out.out.as_deref())
}

fn cmd_sweep(
    path: &Path,
    spec: &SweepSpec,
    solver: Solver,
    alpha: Option<f64>,
    budget: Option<usize>,
    out: &Output,
) -> Result<()> {
    if solver == Solver::Lp {
        return Err(Error::SchemeMismatch {
            solver: "lp".into(),
            scheme: "sweep (needs binary plans)".into(),
        });
    }
    let scenario = load_scenario(path)?;
    let base_k = budget.unwrap_or(scenario.grid.budget);
    let base_alpha = alpha.unwrap_or(scenario.grid.alpha);
    let values = spec.values();

    // Check every point before solving anything.
    let mut points = Vec::with_capacity(values.len());
    for &v in &values {
        let grid = spec.apply(&scenario.grid, v)?;
        let k = if spec.param == SweepParam::Budget { spec.budget_at(v)? } else { base_k };
        let a = if spec.param == SweepParam::Alpha { v } else { base_alpha };
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Validation(format!("alpha sweep point {a} outside [0, 1]")));
        }
        if k > grid.num_sites() {
            return Err(Error::Validation(format!("budget sweep point {k} exceeds {} sites", grid.num_sites())));
        }
        points.push((v, grid, k, a));
    }

    let geometric = matches!(
        spec.param,
        SweepParam::CrowdedRange(_) | SweepParam::WitRange | SweepParam::WetRange
    );
    let shared = if geometric { None } else { Some(PlanningInstance::build(&scenario)?) };
    let mut cache: HashMap<usize, (SolveOutcome, SolveOutcome)> = HashMap::new();
    let mut rows = Vec::with_capacity(points.len());

    for (value, grid, k, a) in points {
        let owned;
        let inst = match &shared {
            Some(inst) => inst,
            None => {
                owned = PlanningInstance::build(&Scenario {
                    grid,
                    users: scenario.users.clone(),
                })?;
                &owned
            }
        };
        let solve_ie = || -> Result<(SolveOutcome, SolveOutcome)> {
            let i = solve(&DeploymentProblem::i(inst, k), solver)?;
            let e = match solver {
                Solver::Greedy => solve(&DeploymentProblem::e(inst, k), Solver::Exhaustive),
                _ => solve(&DeploymentProblem::e(inst, k), solver),
            }?;
            Ok((i, e))
        };
        let (i, e) = if geometric {
            solve_ie()?
        } else {
            match cache.get(&k) {
                Some(hit) => hit.clone(),
                None => {
                    let fresh = solve_ie()?;
                    cache.insert(k, fresh.clone());
                    fresh
                }
            }
        };
        let eps_max = if solver == Solver::Exhaustive {
            e.evaluated.epsilon
        } else {
            compute_epsilon_max(inst, k, DEFAULT_CANDIDATE_CAP)?
        };
        let b_solver = if solver == Solver::Greedy { Solver::Exhaustive } else { solver };
        let b = solve(&DeploymentProblem::b_with(inst, k, a, eps_max), b_solver)?;
        let s = solve_s_baseline(inst, k)?;
        let (site_tau_d, site_tau_e) = match spec.site() {
            Some(site) => {
                let idx = inst.grid.index(site)?;
                (
                    Some(inst.analyses.iter().map(|an| an.total_wit[idx]).sum()),
                    Some(inst.analyses.iter().map(|an| an.total_wet[idx]).sum()),
                )
            }
            None => (None, None),
        };
        info!("{}={value}: K={k}, alpha={a}", spec.param);
        rows.push(SweepRow {
            parameter: spec.param.to_string(),
            value,
            k,
            alpha: a,
            epsilon_max: eps_max,
            eta_i: i.evaluated.eta,
            epsilon_i: i.evaluated.epsilon,
            eta_e: e.evaluated.eta,
            epsilon_e: e.evaluated.epsilon,
            eta_b: b.evaluated.eta,
            epsilon_b: b.evaluated.epsilon,
            eta_s: s.evaluated.eta,
            epsilon_s: s.evaluated.epsilon,
            site_tau_d,
            site_tau_e,
        });
    }
    emit(&rows, out.format, out.out.as_deref())
}

fn cmd_generate(
    seed: u64,
    users: Option<usize>,
    size: Option<usize>,
    budget: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let mut cfg = GeneratorConfig::standard(seed);
    if let Some(m) = users {
        cfg.users = m;
    }
    if let Some(n) = size {
        cfg.x_i = n;
        cfg.x_j = n;
    }
    if let Some(k) = budget {
        cfg.budget = k;
    }
    let scenario = cfg.generate()?;
    let notes = format!(
        "generated by hap-planner with seed {seed}: crowded ranges drawn uniformly from [{}, {}) m, \
         base speeds from [{}, {}) m/s, crowd speed ratio from [{}, {}), random turn weights; \
         path-loss exponent {}",
        cfg.crowded_range.lo,
        cfg.crowded_range.hi,
        cfg.base_speed.lo,
        cfg.base_speed.hi,
        cfg.crowd_speed_ratio.lo,
        cfg.crowd_speed_ratio.hi,
        cfg.path_loss.exponent
    );
    let file = ScenarioFile::from_scenario(&scenario, Some(notes));
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::Parse(e.to_string()))?;
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| Error::Io {
            path: p.display().to_string(),
            source: e,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}
