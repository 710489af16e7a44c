/// Physical constants of the tank and pump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Tank cross-section.
    pub area: f64,
    /// Maximum level.
    pub capacity: f64,
    /// Pump delivery when on.
    pub pump_rate: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            area: 1.0,
            capacity: 3.0,
            pump_rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub tank_level: f64,
    /// Flows over the last step.
    pub inflow: f64,
    pub outflow: f64,
    pub pump_on: bool,
    pub time: usize,
}

impl PlantState {
    pub fn at_rest(level: f64) -> Self {
        PlantState {
            tank_level: level,
            inflow: 0.0,
            outflow: 0.0,
            pump_on: false,
            time: 0,
        }
    }
}

/// One explicit Euler step of the tank mass balance.
pub fn plant_step(s: &PlantState, demand: f64, dt: f64, p: &PlantParams) -> PlantState {
    assert!(dt > 0.0, "dt must be positive");
    let inflow = if s.pump_on { p.pump_rate } else { 0.0 };
    let outflow = demand.max(0.0);
    PlantState {
        tank_level: (s.tank_level + dt * (inflow - outflow) / p.area).clamp(0.0, p.capacity),
        inflow,
        outflow,
        pump_on: s.pump_on,
        time: s.time + 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    On,
    Off,
    Hold,
}

/// Bang-bang control with a dead band.
pub fn control_decision(level_estimate: f64, low: f64, high: f64) -> Decision {
    debug_assert!(low < high);
    if level_estimate < low {
        Decision::On
    } else if level_estimate > high {
        Decision::Off
    } else {
        Decision::Hold
    }
}
