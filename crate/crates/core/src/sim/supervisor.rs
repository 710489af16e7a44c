//! The supervisor loop: detect failures, update the process description,
//! re-run the reasoning pipeline and swap the active control loop.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::configurator::{configure, ControlLoopConfig};
use crate::diagnostic::Diagnostic;
use crate::domain::{IndustrialDomain, Repository};
use crate::estimation::{parse_state, translate, traverse, SegNode};
use crate::lang::{mermaid, Session, Value};
use crate::process::ProcessGraph;
use crate::session::{is_live, Verdict};
use crate::sim::hydraulics::{estimate_level, EstimationContext, Snapshot};
use crate::sim::plant::{control_decision, plant_step, Decision, PlantState};
use crate::sim::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("sensing point `{sensor}` is unavailable{}", .device.as_ref().map(|d| format!(" (device `{d}` is down)")).unwrap_or_default())]
    SensorUnavailable { sensor: String, device: Option<String> },
    #[error("no value for state `{0}`")]
    MissingState(String),
    #[error("no simulation law for estimator {0}")]
    UnsupportedEstimator(String),
    #[error("model script: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Model(Vec<Diagnostic>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Event {
    /// The first control loop was deployed.
    Configured {
        tree: String,
        candidates: usize,
    },
    Failure {
        device: String,
    },
    Reconfiguration {
        tree: String,
        candidates: usize,
    },
    /// The controller changed the pump state.
    Switch {
        on: bool,
    },
    Fatal {
        message: String,
    },
    /// The failure left no way to estimate the controlled state.
    Unrecoverable {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogEntry {
    pub step: usize,
    pub event: Event,
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: ", self.step)?;
        match &self.event {
            Event::Configured { tree, candidates } => {
                write!(f, "configured {tree} (1 of {candidates} trees)")
            }
            Event::Failure { device } => write!(f, "failure of device {device}"),
            Event::Reconfiguration { tree, candidates } => {
                write!(f, "reconfigured to {tree} (1 of {candidates} trees)")
            }
            Event::Switch { on } => write!(f, "pump {}", if *on { "ON" } else { "OFF" }),
            Event::Fatal { message } => write!(f, "fatal: {message}"),
            Event::Unrecoverable { message } => write!(f, "unrecoverable: {message}"),
        }
    }
}

/// Plant and estimate at the start of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub level: f64,
    pub estimate: f64,
    pub pump_on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Halted,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub log: Vec<LogEntry>,
    pub trace: Vec<StepRecord>,
    pub outcome: Outcome,
    /// Every loop deployed, with the liveness verdict checked at deployment.
    pub loops: Vec<(ControlLoopConfig, Verdict)>,
    pub process: ProcessGraph,
}

impl RunReport {
    pub fn reconfigurations(&self) -> usize {
        self.log
            .iter()
            .filter(|e| matches!(e.event, Event::Reconfiguration { .. }))
            .count()
    }

    pub fn active(&self) -> Option<&ControlLoopConfig> {
        self.loops.last().map(|(c, _)| c)
    }

    pub fn timeline(&self) -> String {
        let events: Vec<(usize, String)> = self
            .log
            .iter()
            .map(|e| {
                let text = e.to_string();
                let what = text.split_once(": ").map(|(_, w)| w.to_string()).unwrap_or(text);
                (e.step, what)
            })
            .collect();
        mermaid::timeline("supervisor events", &events)
    }
}

/// Evaluates a model script and extracts the domain, repository and process
/// the scenario names.
pub fn load_model(s: &Scenario, src: &str) -> Result<(IndustrialDomain, Repository, ProcessGraph), SimError> {
    let mut session = Session::new();
    session.state_budget = s.state_budget;
    let (_, diags) = session.run(src);
    if !diags.is_empty() {
        return Err(SimError::Model(diags));
    }
    let missing =
        |what: &str, name: &str| SimError::Model(vec![Diagnostic::error(None, format!("no {what} named `{name}`"))]);
    let (process, domain) = match session.get(&s.process) {
        Some(Value::Process(ctx)) => ((*ctx.process).clone(), (*ctx.domain).clone()),
        _ => return Err(missing("process", &s.process)),
    };
    let repo = match session.get(&s.repository) {
        Some(Value::Repository(r)) => (**r).clone(),
        _ => return Err(missing("repository", &s.repository)),
    };
    Ok((domain, repo, process))
}

enum Stop {
    Fatal(String),
    Unrecoverable(String),
}

struct Pipeline<'a> {
    s: &'a Scenario,
    domain: &'a IndustrialDomain,
    repo: &'a Repository,
    root: SegNode,
}

impl Pipeline<'_> {
    /// translate, traverse, configure (which composes), then the liveness
    /// check on the chosen configuration.
    fn run(&self, process: &ProcessGraph) -> Result<(ControlLoopConfig, usize, Verdict), Stop> {
        let g = translate(process, self.domain).map_err(|e| Stop::Fatal(e.to_string()))?;
        let trees = traverse(&self.root, &g).map_err(|e| Stop::Fatal(e.to_string()))?;
        if trees.is_empty() {
            return Err(Stop::Unrecoverable(format!("no estimation tree for {}", self.root)));
        }
        let idx = self.s.tree_index.min(trees.len()) - 1;
        let cfg = configure(&trees[idx], self.repo, &self.s.controller, &self.s.actuator, process)
            .map_err(|e| Stop::Fatal(e.to_string()))?;
        let verdict = is_live(&cfg.configuration, self.s.state_budget);
        if verdict.is_violated() {
            return Err(Stop::Fatal(format!("deployed configuration is not live: {verdict}")));
        }
        Ok((cfg, trees.len(), verdict))
    }
}

/// Runs the scenario to completion or until the supervisor gives up.
pub fn run_scenario(s: &Scenario, domain: &IndustrialDomain, repo: &Repository, process: &ProcessGraph) -> RunReport {
    let mut report = RunReport {
        log: Vec::new(),
        trace: Vec::new(),
        outcome: Outcome::Completed,
        loops: Vec::new(),
        process: process.clone(),
    };
    let Some(root) = parse_state(&s.root) else {
        report.log.push(LogEntry {
            step: 0,
            event: Event::Fatal {
                message: format!("`{}` is not a state", s.root),
            },
        });
        report.outcome = Outcome::Halted;
        return report;
    };
    let tank = match &root {
        SegNode::State { component, .. } => component.clone(),
        _ => unreachable!(),
    };
    let pipeline = Pipeline { s, domain, repo, root };

    let halt = |report: &mut RunReport, step: usize, stop: Stop| {
        let event = match stop {
            Stop::Fatal(message) => Event::Fatal { message },
            Stop::Unrecoverable(message) => Event::Unrecoverable { message },
        };
        report.log.push(LogEntry { step, event });
        report.outcome = Outcome::Halted;
    };
    let tree_name = |c: &ControlLoopConfig| c.tree.to_string();

    match pipeline.run(&report.process) {
        Ok((cfg, candidates, verdict)) => {
            report.log.push(LogEntry {
                step: 0,
                event: Event::Configured {
                    tree: tree_name(&cfg),
                    candidates,
                },
            });
            report.loops.push((cfg, verdict));
        }
        Err(stop) => {
            halt(&mut report, 0, stop);
            return report;
        }
    }

    let mut dead: BTreeSet<String> = BTreeSet::new();
    let mut plant = PlantState::at_rest(s.initial_level);
    let mut last_known = s.initial_level;

    // Records the failure, updates the knowledge base and redeploys.
    let fail = |report: &mut RunReport, step: usize, device: &str| -> Result<(), Stop> {
        report.log.push(LogEntry {
            step,
            event: Event::Failure {
                device: device.to_string(),
            },
        });
        report.process = report
            .process
            .remove_device(device)
            .map_err(|e| Stop::Fatal(e.to_string()))?;
        let (cfg, candidates, verdict) = pipeline.run(&report.process)?;
        report.log.push(LogEntry {
            step,
            event: Event::Reconfiguration {
                tree: tree_name(&cfg),
                candidates,
            },
        });
        report.loops.push((cfg, verdict));
        Ok(())
    };

    for step in 0..s.steps {
        for f in s.failures.iter().filter(|f| f.step == step) {
            dead.insert(f.device.clone());
            if let Err(stop) = fail(&mut report, step, &f.device) {
                halt(&mut report, step, stop);
                return report;
            }
        }
        let snapshot = Snapshot::compute(process, domain, &tank, &plant, s.lenergy_coefficient);
        let mut estimate = None;
        // A failure the supervisor has not heard about shows up as an
        // unavailable sensor; handle it once and retry with the new loop.
        for _ in 0..2 {
            let ctx = EstimationContext {
                process: &report.process,
                dead_devices: &dead,
                snapshot: &snapshot,
                last_known,
                dt: s.dt,
                params: s.params,
                lenergy_coefficient: s.lenergy_coefficient,
            };
            let tree = &report.active().expect("a loop is deployed").tree;
            match estimate_level(tree, &ctx) {
                Ok(v) => {
                    estimate = Some(v);
                    break;
                }
                Err(SimError::SensorUnavailable {
                    device: Some(device), ..
                }) if report.process.device_alive(&device) => {
                    if let Err(stop) = fail(&mut report, step, &device) {
                        halt(&mut report, step, stop);
                        return report;
                    }
                }
                Err(e) => {
                    halt(&mut report, step, Stop::Fatal(e.to_string()));
                    return report;
                }
            }
        }
        let Some(estimate) = estimate else {
            halt(
                &mut report,
                step,
                Stop::Fatal("estimation failed after reconfiguration".into()),
            );
            return report;
        };
        report.trace.push(StepRecord {
            step,
            level: plant.tank_level,
            estimate,
            pump_on: plant.pump_on,
        });
        last_known = estimate;
        let pump_on = match control_decision(estimate, s.low, s.high) {
            Decision::On => true,
            Decision::Off => false,
            Decision::Hold => plant.pump_on,
        };
        if pump_on != plant.pump_on {
            report.log.push(LogEntry {
                step,
                event: Event::Switch { on: pump_on },
            });
        }
        plant.pump_on = pump_on;
        plant = plant_step(&plant, s.demand.at(step), s.dt, &s.params);
    }
    report
}
