//! Instantiation of agent templates over an estimation tree.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::domain::{lookup_template, placeholder, AgentKind, ClassKind, LookupError, Repository};
use crate::estimation::{EstimationTree, Provider, SegNode, TreeNode};
use crate::process::ProcessGraph;
use crate::protocol::{Direction, GlobalProtocol, LocalProtocol, Participant};
use crate::session::{compose, CompositionError, ConfigurationError, LocalConfiguration};

/// Which template a participant runs and what it stands for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    pub template: String,
    /// The graph node (sensing point, estimator, actuator) or `controller`.
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlLoopConfig {
    pub configuration: LocalConfiguration,
    pub assignments: IndexMap<Participant, Assignment>,
    pub certified: GlobalProtocol,
    pub tree: EstimationTree,
}

impl fmt::Display for ControlLoopConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.configuration)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigureError {
    #[error("`{0}` is not an actuator of the process")]
    UnknownActuator(String),
    #[error("device `{device}` of `{node}` has failed")]
    DeadDevice { node: String, device: String },
    #[error("no control template named `{0}`")]
    UnknownController(String),
    #[error("template `{template}` controls `{subject}`, but `{actuator}` is a `{class}`")]
    ControllerMismatch {
        template: String,
        subject: String,
        actuator: String,
        class: String,
    },
    #[error(transparent)]
    Template(#[from] LookupError),
    #[error("template `{template}` for {node} expects {expected} producer(s) but the tree provides {found}")]
    Arity {
        template: String,
        node: String,
        expected: usize,
        found: usize,
    },
    #[error("template `{template}` must have exactly one consumer, found {found}")]
    Consumers { template: String, found: usize },
    #[error("controller `{controller}` sends {sent} but actuator template `{actuator}` expects {expected}")]
    SignalMismatch {
        controller: String,
        actuator: String,
        sent: String,
        expected: String,
    },
    #[error("sensing point `{0}` is not part of the process")]
    UnknownSensor(String),
    #[error(transparent)]
    Configuration(#[from] ConfigurationError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
}

fn participant(name: &str) -> Participant {
    Participant::new(name).expect("graph names are identifiers")
}

/// Instantiates a template protocol, renaming placeholders through `map`.
fn instantiate(protocol: &LocalProtocol, map: &HashMap<Participant, Participant>) -> LocalProtocol {
    protocol.rename(&|p| map.get(p).cloned().unwrap_or_else(|| p.clone()))
}

struct Builder<'a> {
    repo: &'a Repository,
    process: &'a ProcessGraph,
    config: LocalConfiguration,
    assignments: IndexMap<Participant, Assignment>,
}

impl Builder<'_> {
    fn check_single_consumer(&self, template: &str, protocol: &LocalProtocol) -> Result<(), ConfigureError> {
        let consumers = protocol
            .participants()
            .into_iter()
            .filter(|p| matches!(placeholder(p), Some((Direction::Send, _))))
            .count();
        if consumers != 1 {
            return Err(ConfigureError::Consumers {
                template: template.to_string(),
                found: consumers,
            });
        }
        Ok(())
    }

    /// Adds the agents providing `n` (post-order) and returns the
    /// participant that delivers `n.state` to `consumer`.
    fn add(&mut self, n: &TreeNode, consumer: &Participant) -> Result<Participant, ConfigureError> {
        match &n.provider {
            Provider::Sensor(s) => {
                let SegNode::Sensing { sensor } = s else {
                    unreachable!("sensor providers are sensing nodes")
                };
                let sp = self
                    .process
                    .sensors
                    .get(sensor)
                    .ok_or_else(|| ConfigureError::UnknownSensor(sensor.clone()))?;
                if !self.process.device_alive(&sp.device) {
                    return Err(ConfigureError::DeadDevice {
                        node: sensor.clone(),
                        device: sp.device.clone(),
                    });
                }
                let t = lookup_template(self.repo, AgentKind::Sense, &sp.property)?;
                self.check_single_consumer(&t.name, &t.protocol)?;
                let me = participant(sensor);
                let mut map = HashMap::new();
                map.insert(participant("consumer1"), consumer.clone());
                check_arity(&t.name, sensor, t.producers().len(), 0)?;
                self.config.bind(me.clone(), instantiate(&t.protocol, &map))?;
                self.assignments.insert(
                    me.clone(),
                    Assignment {
                        template: t.name.clone(),
                        node: sensor.clone(),
                    },
                );
                Ok(me)
            }
            Provider::Estimator { node, inputs } => {
                let SegNode::Estimator { estimator, .. } = node else {
                    unreachable!("estimator providers are estimator nodes")
                };
                let t = lookup_template(self.repo, AgentKind::Estimate, estimator)?;
                self.check_single_consumer(&t.name, &t.protocol)?;
                let producers = t.producers();
                check_arity(&t.name, &node.to_string(), producers.len(), inputs.len())?;
                let me = participant(&node.to_string());
                let mut map = HashMap::new();
                map.insert(participant("consumer1"), consumer.clone());
                for (ph, input) in producers.iter().zip(inputs) {
                    let provider = self.add(input, &me)?;
                    map.insert(ph.clone(), provider);
                }
                self.config.bind(me.clone(), instantiate(&t.protocol, &map))?;
                self.assignments.insert(
                    me.clone(),
                    Assignment {
                        template: t.name.clone(),
                        node: node.to_string(),
                    },
                );
                Ok(me)
            }
        }
    }
}

fn check_arity(template: &str, node: &str, expected: usize, found: usize) -> Result<(), ConfigureError> {
    if expected != found {
        return Err(ConfigureError::Arity {
            template: template.to_string(),
            node: node.to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Choices a protocol makes towards (`Send`) or accepts from (`Receive`) a
/// placeholder, as sort plus label set.
fn signals(protocol: &LocalProtocol, peer: &str, dir: Direction) -> BTreeSet<String> {
    protocol
        .choices()
        .into_iter()
        .filter(|c| c.peer.as_str() == peer && c.direction == dir)
        .map(|c| {
            let labels: Vec<&str> = c.labels().map(|l| l.as_str()).collect();
            format!("{} {{{}}}", c.sort, labels.join(", "))
        })
        .collect()
}

fn describe(set: &BTreeSet<String>) -> String {
    if set.is_empty() {
        "no choice".to_string()
    } else {
        set.iter().cloned().collect::<Vec<_>>().join(" and ")
    }
}

/// Builds and certifies the control loop for `tree`.
pub fn configure(
    tree: &EstimationTree,
    repo: &Repository,
    controller_template: &str,
    actuator: &str,
    process: &ProcessGraph,
) -> Result<ControlLoopConfig, ConfigureError> {
    let act = process
        .components
        .get(actuator)
        .filter(|c| c.kind == ClassKind::Actuator)
        .ok_or_else(|| ConfigureError::UnknownActuator(actuator.to_string()))?;
    let device = act.device.clone().unwrap_or_default();
    if !process.device_alive(&device) {
        return Err(ConfigureError::DeadDevice {
            node: actuator.to_string(),
            device,
        });
    }
    let ctrl = repo
        .templates
        .iter()
        .filter(|t| t.kind == AgentKind::Control && t.name == controller_template)
        .collect::<Vec<_>>();
    let ctrl = match ctrl.as_slice() {
        [t] => *t,
        [] => return Err(ConfigureError::UnknownController(controller_template.to_string())),
        _ => {
            return Err(LookupError::Ambiguous {
                kind: AgentKind::Control,
                subject: controller_template.to_string(),
                count: ctrl.len(),
            }
            .into())
        }
    };
    if ctrl.subject != act.class_name {
        return Err(ConfigureError::ControllerMismatch {
            template: ctrl.name.clone(),
            subject: ctrl.subject.clone(),
            actuator: actuator.to_string(),
            class: act.class_name.clone(),
        });
    }
    let act_t = lookup_template(repo, AgentKind::Actuate, &act.class_name)?;
    let sent = signals(&ctrl.protocol, "consumer1", Direction::Send);
    let expected = signals(&act_t.protocol, "producer1", Direction::Receive);
    if sent != expected {
        return Err(ConfigureError::SignalMismatch {
            controller: ctrl.name.clone(),
            actuator: act_t.name.clone(),
            sent: describe(&sent),
            expected: describe(&expected),
        });
    }
    check_arity(&ctrl.name, controller_template, ctrl.producers().len(), 1)?;
    check_arity(&act_t.name, actuator, act_t.producers().len(), 1)?;

    let ctrl_p = participant(controller_template);
    let act_p = participant(actuator);
    let mut b = Builder {
        repo,
        process,
        config: LocalConfiguration::new(),
        assignments: IndexMap::new(),
    };
    let root_provider = b.add(&tree.root, &ctrl_p)?;

    let mut map = HashMap::new();
    map.insert(participant("producer1"), root_provider);
    map.insert(participant("consumer1"), act_p.clone());
    b.config.bind(ctrl_p.clone(), instantiate(&ctrl.protocol, &map))?;
    b.assignments.insert(
        ctrl_p.clone(),
        Assignment {
            template: ctrl.name.clone(),
            node: controller_template.to_string(),
        },
    );
    let mut map = HashMap::new();
    map.insert(participant("producer1"), ctrl_p);
    b.config.bind(act_p.clone(), instantiate(&act_t.protocol, &map))?;
    b.assignments.insert(
        act_p,
        Assignment {
            template: act_t.name.clone(),
            node: actuator.to_string(),
        },
    );

    let certified = compose(&b.config)?;
    Ok(ControlLoopConfig {
        configuration: b.config,
        assignments: b.assignments,
        certified,
        tree: tree.clone(),
    })
}
