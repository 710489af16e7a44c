//! Hydraulic values seen by the sensors, and the estimator laws the agents
//! run over them.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use crate::domain::IndustrialDomain;
use crate::estimation::{EstimationTree, Provider, SegNode, TreeNode};
use crate::process::ProcessGraph;
use crate::sim::plant::{PlantParams, PlantState};
use crate::sim::supervisor::SimError;

const FLOW: &str = "flow";
const HEAD: &str = "head";
const LINK_ENERGY: &str = "link_energy";

/// Values of every measurable state for one plant state.
///
/// Link components (those with a `link_energy` attribute) carry the pump
/// flow upstream of the tank and the demand downstream of it. Node flows
/// are whatever balances their links. Heads start at the tank level and
/// follow the linear link law outward.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    values: HashMap<(String, String), f64>,
}

impl Snapshot {
    pub fn compute(
        process: &ProcessGraph,
        domain: &IndustrialDomain,
        tank: &str,
        plant: &PlantState,
        lenergy_coefficient: f64,
    ) -> Snapshot {
        let has = |c: &str, attr: &str| {
            process
                .components
                .get(c)
                .and_then(|c| domain.class(&c.class_name))
                .is_some_and(|k| k.has_attribute(attr))
        };
        let links: Vec<(&str, &str)> = process.component_links().collect();
        let reach = |forward: bool| {
            let mut seen = HashSet::from([tank]);
            let mut queue = VecDeque::from([tank]);
            while let Some(n) = queue.pop_front() {
                for &(a, b) in &links {
                    let (from, to) = if forward { (a, b) } else { (b, a) };
                    if from == n && seen.insert(to) {
                        queue.push_back(to);
                    }
                }
            }
            seen
        };
        let upstream = reach(false);
        let downstream = reach(true);

        let mut values = HashMap::new();
        let mut flow = HashMap::new();
        for name in process.components.keys() {
            let n = name.as_str();
            if n != tank && has(n, LINK_ENERGY) {
                let f = if upstream.contains(n) {
                    plant.inflow
                } else if downstream.contains(n) {
                    plant.outflow
                } else {
                    0.0
                };
                flow.insert(n, f);
            }
        }
        for name in process.components.keys() {
            let n = name.as_str();
            if n == tank || flow.contains_key(n) || !has(n, FLOW) {
                continue;
            }
            let inflow: f64 = links
                .iter()
                .filter(|(_, b)| *b == n)
                .filter_map(|(a, _)| flow.get(a))
                .sum();
            let outflow: f64 = links
                .iter()
                .filter(|(a, _)| *a == n)
                .filter_map(|(_, b)| flow.get(b))
                .sum();
            values.insert((n.to_string(), FLOW.to_string()), inflow - outflow);
        }
        for (n, f) in &flow {
            values.insert((n.to_string(), FLOW.to_string()), *f);
        }

        let mut head: HashMap<&str, f64> = HashMap::from([(tank, plant.tank_level)]);
        loop {
            let mut changed = false;
            for (&l, &f) in &flow {
                let ups: Vec<&str> = links.iter().filter(|(_, b)| *b == l).map(|(a, _)| *a).collect();
                let downs: Vec<&str> = links.iter().filter(|(a, _)| *a == l).map(|(_, b)| *b).collect();
                for &a in &ups {
                    for &b in &downs {
                        match (head.get(a).copied(), head.get(b).copied()) {
                            (Some(ha), None) => {
                                head.insert(b, ha - f / lenergy_coefficient);
                                changed = true;
                            }
                            (None, Some(hb)) => {
                                head.insert(a, hb + f / lenergy_coefficient);
                                changed = true;
                            }
                            _ => {}
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for (n, h) in head {
            if has(n, HEAD) {
                values.insert((n.to_string(), HEAD.to_string()), h);
            }
        }
        Snapshot { values }
    }

    pub fn get(&self, component: &str, property: &str) -> Option<f64> {
        self.values.get(&(component.to_string(), property.to_string())).copied()
    }
}

/// Everything the estimation agents read besides their inputs.
#[derive(Debug, Clone, Copy)]
pub struct EstimationContext<'a> {
    /// The supervisor's current knowledge of the process.
    pub process: &'a ProcessGraph,
    /// Devices that are actually down, known to the supervisor or not.
    pub dead_devices: &'a BTreeSet<String>,
    pub snapshot: &'a Snapshot,
    /// Initial condition for storage estimators.
    pub last_known: f64,
    pub dt: f64,
    pub params: PlantParams,
    pub lenergy_coefficient: f64,
}

/// Evaluates the tree bottom-up and returns the estimated root value.
pub fn estimate_level(tree: &EstimationTree, ctx: &EstimationContext) -> Result<f64, SimError> {
    value(&tree.root, ctx)
}

fn state_parts(n: &SegNode) -> (&str, &str) {
    match n {
        SegNode::State { component, property } => (component, property),
        _ => unreachable!("tree values are states"),
    }
}

/// +1 when `other` feeds `component`, -1 when `component` feeds `other`.
fn orientation(process: &ProcessGraph, component: &str, other: &str) -> Option<f64> {
    let mut links = process.component_links();
    if links.any(|(a, b)| a == other && b == component) {
        return Some(1.0);
    }
    if process.component_links().any(|(a, b)| a == component && b == other) {
        return Some(-1.0);
    }
    None
}

/// Solves `sum(coef * value) = 0` for the single unknown term.
fn solve(known: &[(f64, f64)], unknown_coef: f64) -> f64 {
    -known.iter().map(|(c, v)| c * v).sum::<f64>() / unknown_coef
}

fn value(n: &TreeNode, ctx: &EstimationContext) -> Result<f64, SimError> {
    match &n.provider {
        Provider::Sensor(s) => {
            let SegNode::Sensing { sensor } = s else {
                unreachable!("sensor providers are sensing nodes")
            };
            let Some(sp) = ctx.process.sensors.get(sensor) else {
                return Err(SimError::SensorUnavailable {
                    sensor: sensor.clone(),
                    device: None,
                });
            };
            if ctx.dead_devices.contains(&sp.device) {
                return Err(SimError::SensorUnavailable {
                    sensor: sensor.clone(),
                    device: Some(sp.device.clone()),
                });
            }
            let (c, p) = state_parts(&n.state);
            ctx.snapshot
                .get(c, p)
                .ok_or_else(|| SimError::MissingState(n.state.to_string()))
        }
        Provider::Estimator { node, inputs } => {
            let SegNode::Estimator { component, estimator } = node else {
                unreachable!("estimator providers are estimator nodes")
            };
            let mut vals = Vec::with_capacity(inputs.len());
            for i in inputs {
                vals.push((state_parts(&i.state), value(i, ctx)?));
            }
            let (oc, op) = state_parts(&n.state);
            let unsupported = || SimError::UnsupportedEstimator(format!("{node} producing {}", n.state));
            let orient = |other: &str| orientation(ctx.process, component, other).ok_or_else(unsupported);
            match estimator.as_str() {
                "tank_mass" => {
                    if oc != component || op != HEAD {
                        return Err(unsupported());
                    }
                    let mut net = 0.0;
                    for ((c, _), v) in &vals {
                        net += orient(c)? * v;
                    }
                    let p = ctx.params;
                    Ok((ctx.last_known + ctx.dt * net / p.area).clamp(0.0, p.capacity))
                }
                "junction_mass" | "demand_mass" => {
                    // Inflows minus outflows minus the node's own demand.
                    let coef = |c: &str| if c == component { Ok(-1.0) } else { orient(c) };
                    let mut known = Vec::new();
                    for ((c, _), v) in &vals {
                        known.push((coef(c)?, *v));
                    }
                    Ok(solve(&known, coef(oc)?))
                }
                "link_energy" => {
                    // flow - k * (upstream head - downstream head) = 0
                    let k = ctx.lenergy_coefficient;
                    let coef = |c: &str, p: &str| -> Result<f64, SimError> {
                        if c == component && p == FLOW {
                            Ok(1.0)
                        } else if p == HEAD {
                            Ok(-k * orient(c)?)
                        } else {
                            Err(unsupported())
                        }
                    };
                    let mut known = Vec::new();
                    for ((c, p), v) in &vals {
                        known.push((coef(c, p)?, *v));
                    }
                    Ok(solve(&known, coef(oc, op)?))
                }
                _ => Err(unsupported()),
            }
        }
    }
}
