//! Experiment harness for the ARZ solver: named scenarios, network files,
//! convergence studies and CSV/JSON output.

pub mod expr;
pub mod netfile;
pub mod runner;
pub mod scenario;

pub use netfile::{parse_network, NetworkFileError, ParsedNetwork};
pub use runner::{convergence_study, run_scenario, ConvergenceTable, RunOutcome, RunReport, Status};
pub use scenario::{ScenarioConfig, Scenario};
