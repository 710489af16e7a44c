//! A desk-scale autonomic supervisor: tank and pump dynamics, estimation
//! agents evaluated over the active tree, threshold control, and
//! reconfiguration after device failures.

mod hydraulics;
mod plant;
mod scenario;
mod supervisor;

pub use hydraulics::{estimate_level, EstimationContext, Snapshot};
pub use plant::{control_decision, plant_step, Decision, PlantParams, PlantState};
pub use scenario::{Demand, Failure, Scenario, ScenarioError};
pub use supervisor::{load_model, run_scenario, Event, LogEntry, Outcome, RunReport, SimError, StepRecord};
