//! Planning toolkit for hybrid access points (H-APs) on a grid of city
//! streets.
//!
//! The pipeline is: a [`Scenario`] describes the grid and the users'
//! mobility; [`mobility`] turns it into stationary visit probabilities and
//! expected dwell times; [`metrics`] scores a [`DeploymentPlan`] with the
//! WIT efficiency `eta` and the battery-clamped WET efficiency `epsilon`;
//! [`deploy`] searches for the best plan under each scheme. [`sim`] is an
//! independent Monte-Carlo walker used to validate the analytic model, and
//! [`lp`] is the dense simplex used by the relaxation-based solvers.

pub mod deploy;
pub mod error;
pub mod lp;
pub mod metrics;
pub mod mobility;
pub mod quadrature;
pub mod scenario;
pub mod sim;

pub use deploy::{DeploymentProblem, PlanningInstance, Scheme, SolveOutcome, Solver};
pub use error::{Error, Result};
pub use metrics::{DeploymentPlan, EvaluatedPlan};
pub use mobility::{analyze, MobilityAnalysis};
pub use scenario::{load_scenario, GridScenario, Scenario, Site, UserProfile};
