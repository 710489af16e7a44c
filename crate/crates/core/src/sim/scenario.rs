use std::path::PathBuf;

use thiserror::Error;

use crate::session::DEFAULT_STATE_BUDGET;
use crate::sim::plant::PlantParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

/// Demand drawn from the tank outlet at each step.
#[derive(Debug, Clone, PartialEq)]
pub enum Demand {
    Constant(f64),
    /// Repeated cyclically.
    Sequence(Vec<f64>),
}

impl Demand {
    pub fn at(&self, step: usize) -> f64 {
        match self {
            Demand::Constant(d) => *d,
            Demand::Sequence(ds) => ds[step % ds.len()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub device: String,
    pub step: usize,
}

/// A simulation run: plant constants, control thresholds, the model script
/// and names within it, and the failure schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Script defining the domain, repository and process, relative to the
    /// scenario file.
    pub model: Option<PathBuf>,
    pub steps: usize,
    pub dt: f64,
    pub params: PlantParams,
    pub low: f64,
    pub high: f64,
    pub initial_level: f64,
    pub demand: Demand,
    /// Flow per unit of head difference across a link.
    pub lenergy_coefficient: f64,
    /// Which tree of a fresh forest to deploy, 1-based.
    pub tree_index: usize,
    pub root: String,
    pub process: String,
    pub repository: String,
    pub controller: String,
    pub actuator: String,
    pub state_budget: usize,
    pub failures: Vec<Failure>,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            model: None,
            steps: 500,
            dt: 0.1,
            params: PlantParams::default(),
            low: 0.5,
            high: 2.0,
            initial_level: 1.0,
            demand: Demand::Constant(1.0),
            lenergy_coefficient: 1.0,
            tree_index: 1,
            root: "t.head".into(),
            process: "simple".into(),
            repository: "agents".into(),
            controller: "controller".into(),
            actuator: "u".into(),
            state_budget: DEFAULT_STATE_BUDGET,
            failures: Vec::new(),
        }
    }
}

impl Scenario {
    /// Level band the controller is expected to hold once settled.
    pub fn margin(&self) -> f64 {
        self.dt * self.params.pump_rate / self.params.area
    }

    /// Parses `key = value` lines and `fail DEVICE at STEP` lines. Unset
    /// keys keep their defaults.
    pub fn parse(text: &str) -> Result<Scenario, ScenarioError> {
        let mut s = Scenario::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ScenarioError { line, message };
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let words: Vec<&str> = content.split_whitespace().collect();
            if words[0] == "fail" {
                match words.as_slice() {
                    ["fail", device, "at", step] => {
                        let step = step.parse().map_err(|_| err(format!("invalid step `{step}`")))?;
                        s.failures.push(Failure {
                            device: device.to_string(),
                            step,
                        });
                        continue;
                    }
                    _ => return Err(err("expected `fail DEVICE at STEP`".into())),
                }
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(err(format!("expected `key = value`, found `{content}`")));
            };
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| -> Result<f64, ScenarioError> {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| err(format!("`{key}` expects a number, found `{v}`")))
            };
            let count = |v: &str| -> Result<usize, ScenarioError> {
                v.parse::<usize>()
                    .map_err(|_| err(format!("`{key}` expects a non-negative integer, found `{v}`")))
            };
            match key {
                "model" => s.model = Some(PathBuf::from(value)),
                "steps" => s.steps = count(value)?,
                "dt" => s.dt = num(value)?,
                "area" => s.params.area = num(value)?,
                "capacity" => s.params.capacity = num(value)?,
                "pump_rate" => s.params.pump_rate = num(value)?,
                "low" => s.low = num(value)?,
                "high" => s.high = num(value)?,
                "initial_level" => s.initial_level = num(value)?,
                "demand" => {
                    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
                    let mut ds = Vec::with_capacity(parts.len());
                    for p in parts {
                        ds.push(num(p)?);
                    }
                    s.demand = if ds.len() == 1 {
                        Demand::Constant(ds[0])
                    } else {
                        Demand::Sequence(ds)
                    };
                }
                "lenergy_coefficient" => s.lenergy_coefficient = num(value)?,
                "tree_index" => s.tree_index = count(value)?,
                "root" => s.root = value.to_string(),
                "process" => s.process = value.to_string(),
                "repository" => s.repository = value.to_string(),
                "controller" => s.controller = value.to_string(),
                "actuator" => s.actuator = value.to_string(),
                "state_budget" => s.state_budget = count(value)?,
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        s.check().map_err(|message| ScenarioError { line: 0, message })?;
        Ok(s)
    }

    fn check(&self) -> Result<(), String> {
        if self.dt <= 0.0 {
            return Err("`dt` must be positive".into());
        }
        if self.params.area <= 0.0 || self.params.capacity <= 0.0 {
            return Err("`area` and `capacity` must be positive".into());
        }
        if self.low >= self.high {
            return Err("`low` must be below `high`".into());
        }
        if self.lenergy_coefficient == 0.0 {
            return Err("`lenergy_coefficient` must be non-zero".into());
        }
        if self.tree_index == 0 {
            return Err("`tree_index` is 1-based".into());
        }
        Ok(())
    }
}
