//! Semantic description and reasoning for industrial cyber-physical systems:
//! behavioural types for agents, domain ontologies, process descriptions,
//! state estimation, control-loop configuration and an autonomic supervisor
//! simulation.

pub mod configurator;
pub mod diagnostic;
pub mod domain;
pub mod estimation;
pub mod lang;
pub mod process;
pub mod protocol;
pub mod session;
pub mod sim;
