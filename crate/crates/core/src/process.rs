//! Process knowledge graphs: devices, component instances, sensing points
//! and their connections.

use std::collections::HashSet;
use std::fmt;

use indexmap::IndexMap;
use thiserror::Error;

use crate::diagnostic::{Diagnostic, Pos, Span};
use crate::domain::{ClassKind, IndustrialDomain};

/// A name with the position it was written at.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Named {
    pub name: String,
    pub span: Span,
}

impl Named {
    pub fn new(name: impl Into<String>) -> Self {
        Named {
            name: name.into(),
            span: Span::none(),
        }
    }

    pub fn at(name: impl Into<String>, pos: Pos) -> Self {
        Named {
            name: name.into(),
            span: Span::at(pos),
        }
    }
}

/// One line of a `process` block, as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProcessItem {
    Devices(Vec<Named>),
    Components {
        kind: ClassKind,
        /// Instance name with optional `@device` binding.
        instances: Vec<(Named, Option<Named>)>,
        class: Named,
    },
    Sensors {
        points: Vec<(Named, Named)>,
        property: Named,
    },
    Connections(Vec<(Named, Named)>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessDecl {
    pub domain: Named,
    pub items: Vec<ProcessItem>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    pub name: String,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentInstance {
    pub name: String,
    pub class_name: String,
    pub kind: ClassKind,
    pub device: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensingPoint {
    pub name: String,
    pub property: String,
    pub device: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessGraph {
    pub domain_name: String,
    pub devices: IndexMap<String, Device>,
    pub components: IndexMap<String, ComponentInstance>,
    pub sensors: IndexMap<String, SensingPoint>,
    pub connections: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProcessError {
    #[error("unknown device `{0}`")]
    UnknownDevice(String),
}

impl ProcessGraph {
    pub fn empty(domain_name: impl Into<String>) -> Self {
        ProcessGraph {
            domain_name: domain_name.into(),
            devices: IndexMap::new(),
            components: IndexMap::new(),
            sensors: IndexMap::new(),
            connections: Vec::new(),
        }
    }

    pub fn device_alive(&self, name: &str) -> bool {
        self.devices.get(name).is_some_and(|d| d.alive)
    }

    /// The component a sensing point is attached to.
    pub fn sensor_host(&self, sensor: &str) -> Option<&str> {
        self.connections
            .iter()
            .find(|(_, b)| b == sensor)
            .map(|(a, _)| a.as_str())
    }

    /// Connections between two components (sensor attachments excluded).
    pub fn component_links(&self) -> impl Iterator<Item = (&str, &str)> {
        self.connections
            .iter()
            .filter(|(a, b)| self.components.contains_key(a) && self.components.contains_key(b))
            .map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// Actuators bound to `device`.
    pub fn actuators_on(&self, device: &str) -> Vec<&str> {
        self.components
            .values()
            .filter(|c| c.device.as_deref() == Some(device))
            .map(|c| c.name.as_str())
            .collect()
    }

    /// Marks `d` as failed and drops every sensing point it hosts together
    /// with their connections. Actuators keep their binding to the dead
    /// device, which makes them unusable for configuration.
    pub fn remove_device(&self, d: &str) -> Result<ProcessGraph, ProcessError> {
        if !self.devices.contains_key(d) {
            return Err(ProcessError::UnknownDevice(d.to_string()));
        }
        let mut out = self.clone();
        out.devices[d].alive = false;
        out.sensors.retain(|_, s| s.device != d);
        out.connections
            .retain(|(a, b)| !self.is_sensor_on(a, d) && !self.is_sensor_on(b, d));
        Ok(out)
    }

    fn is_sensor_on(&self, node: &str, d: &str) -> bool {
        self.sensors.get(node).is_some_and(|s| s.device == d)
    }

    /// Rebuilds a declaration that prints back to this graph. Failed devices
    /// stay listed so that actuator bindings still resolve.
    pub fn to_decl(&self) -> ProcessDecl {
        let mut items = Vec::new();
        if !self.devices.is_empty() {
            items.push(ProcessItem::Devices(self.devices.keys().map(Named::new).collect()));
        }
        // group consecutive instances of one class
        type Group = (ClassKind, String, Vec<(Named, Option<Named>)>);
        let mut groups: Vec<Group> = Vec::new();
        for c in self.components.values() {
            let inst = (Named::new(&c.name), c.device.as_ref().map(Named::new));
            match groups.last_mut() {
                Some((k, cls, v)) if *k == c.kind && *cls == c.class_name => v.push(inst),
                _ => groups.push((c.kind, c.class_name.clone(), vec![inst])),
            }
        }
        for (kind, class, instances) in groups {
            items.push(ProcessItem::Components {
                kind,
                instances,
                class: Named::new(class),
            });
        }
        let mut sensor_groups: Vec<(String, Vec<(Named, Named)>)> = Vec::new();
        for s in self.sensors.values() {
            let pt = (Named::new(&s.name), Named::new(&s.device));
            match sensor_groups.last_mut() {
                Some((p, v)) if *p == s.property => v.push(pt),
                _ => sensor_groups.push((s.property.clone(), vec![pt])),
            }
        }
        for (property, points) in sensor_groups {
            items.push(ProcessItem::Sensors {
                points,
                property: Named::new(property),
            });
        }
        if !self.connections.is_empty() {
            items.push(ProcessItem::Connections(
                self.connections
                    .iter()
                    .map(|(a, b)| (Named::new(a), Named::new(b)))
                    .collect(),
            ));
        }
        ProcessDecl {
            domain: Named::new(&self.domain_name),
            items,
        }
    }
}

impl fmt::Display for ProcessDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "process {} {{", self.domain.name)?;
        for item in &self.items {
            match item {
                ProcessItem::Devices(ds) => {
                    let names: Vec<&str> = ds.iter().map(|d| d.name.as_str()).collect();
                    writeln!(f, "  device {}", names.join(", "))?;
                }
                ProcessItem::Components { kind, instances, class } => {
                    let names: Vec<String> = instances
                        .iter()
                        .map(|(n, d)| match d {
                            Some(d) => format!("{}@{}", n.name, d.name),
                            None => n.name.clone(),
                        })
                        .collect();
                    writeln!(f, "  {} {} {}", kind.keyword(), names.join(", "), class.name)?;
                }
                ProcessItem::Sensors { points, property } => {
                    let names: Vec<String> = points.iter().map(|(n, d)| format!("{}@{}", n.name, d.name)).collect();
                    writeln!(f, "  sensor {} {}", names.join(", "), property.name)?;
                }
                ProcessItem::Connections(cs) => {
                    let pairs: Vec<String> = cs.iter().map(|(a, b)| format!("{}->{}", a.name, b.name)).collect();
                    writeln!(f, "  conn {}", pairs.join(", "))?;
                }
            }
        }
        write!(f, "}}")
    }
}

impl fmt::Display for ProcessGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<&str> = self
            .devices
            .values()
            .filter(|d| !d.alive)
            .map(|d| d.name.as_str())
            .collect();
        if !failed.is_empty() {
            writeln!(f, "# failed devices: {}", failed.join(", "))?;
        }
        write!(f, "{}", self.to_decl())
    }
}

/// Validates a declaration against its domain and builds the graph.
pub fn build_process(decl: &ProcessDecl, domain: &IndustrialDomain) -> Result<ProcessGraph, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    let mut g = ProcessGraph::empty(&decl.domain.name);
    let mut node_names: HashSet<String> = HashSet::new();
    let mut device_refs: Vec<&Named> = Vec::new();

    for item in &decl.items {
        match item {
            ProcessItem::Devices(ds) => {
                for d in ds {
                    if g.devices.contains_key(&d.name) {
                        diags.push(Diagnostic::error(d.span.0, format!("duplicate device `{}`", d.name)));
                    } else {
                        g.devices.insert(
                            d.name.clone(),
                            Device {
                                name: d.name.clone(),
                                alive: true,
                            },
                        );
                    }
                }
            }
            ProcessItem::Components { kind, instances, class } => {
                match domain.class(&class.name) {
                    None => diags.push(Diagnostic::error(
                        class.span.0,
                        format!("unknown component class `{}`", class.name),
                    )),
                    Some(c) if c.kind != *kind => diags.push(Diagnostic::error(
                        class.span.0,
                        format!(
                            "`{}` is declared as {} but `{}` is a {} class",
                            instance_names(instances),
                            kind.keyword(),
                            c.name,
                            c.kind.keyword()
                        ),
                    )),
                    Some(_) => {}
                }
                for (n, dev) in instances {
                    if !node_names.insert(n.name.clone()) {
                        diags.push(Diagnostic::error(n.span.0, format!("duplicate node name `{}`", n.name)));
                        continue;
                    }
                    match (kind, dev) {
                        (ClassKind::Actuator, None) => diags.push(Diagnostic::error(
                            n.span.0,
                            format!("actuator `{}` needs a device binding (`{}@device`)", n.name, n.name),
                        )),
                        (ClassKind::Physical, Some(d)) => diags.push(Diagnostic::error(
                            d.span.0,
                            format!("physical component `{}` cannot be bound to a device", n.name),
                        )),
                        (_, Some(d)) => device_refs.push(d),
                        _ => {}
                    }
                    g.components.insert(
                        n.name.clone(),
                        ComponentInstance {
                            name: n.name.clone(),
                            class_name: class.name.clone(),
                            kind: *kind,
                            device: dev.as_ref().map(|d| d.name.clone()),
                        },
                    );
                }
            }
            ProcessItem::Sensors { points, property } => {
                match domain.property(&property.name) {
                    None => diags.push(Diagnostic::error(
                        property.span.0,
                        format!("unknown property `{}`", property.name),
                    )),
                    Some(p) if p.is_enum() => diags.push(Diagnostic::error(
                        property.span.0,
                        format!("cannot sense enumeration `{}`", property.name),
                    )),
                    Some(_) => {}
                }
                for (n, d) in points {
                    if !node_names.insert(n.name.clone()) {
                        diags.push(Diagnostic::error(n.span.0, format!("duplicate node name `{}`", n.name)));
                        continue;
                    }
                    device_refs.push(d);
                    g.sensors.insert(
                        n.name.clone(),
                        SensingPoint {
                            name: n.name.clone(),
                            property: property.name.clone(),
                            device: d.name.clone(),
                        },
                    );
                }
            }
            ProcessItem::Connections(_) => {}
        }
    }

    for d in device_refs {
        if !g.devices.contains_key(&d.name) {
            diags.push(Diagnostic::error(d.span.0, format!("unknown device `{}`", d.name)));
        }
    }

    let mut hosts: IndexMap<String, usize> = IndexMap::new();
    for item in &decl.items {
        let ProcessItem::Connections(cs) = item else { continue };
        for (a, b) in cs {
            let mut ok = true;
            for n in [a, b] {
                if !node_names.contains(&n.name) {
                    ok = false;
                    diags.push(Diagnostic::error(
                        n.span.0,
                        format!("connection {}->{}: unknown node `{}`", a.name, b.name, n.name),
                    ));
                }
            }
            if !ok {
                continue;
            }
            if g.sensors.contains_key(&a.name) {
                diags.push(Diagnostic::error(
                    a.span.0,
                    format!(
                        "connection {}->{}: a sensing point can only be the target of a connection",
                        a.name, b.name
                    ),
                ));
                continue;
            }
            if a.name == b.name {
                diags.push(Diagnostic::error(
                    a.span.0,
                    format!("`{}` is connected to itself", a.name),
                ));
                continue;
            }
            if let Some(s) = g.sensors.get(&b.name) {
                *hosts.entry(b.name.clone()).or_default() += 1;
                let host = &g.components[&a.name];
                if let Some(c) = domain.class(&host.class_name) {
                    if !c.has_attribute(&s.property) {
                        diags.push(Diagnostic::error(
                            b.span.0,
                            format!(
                                "sensor `{}` measures `{}`, which `{}` ({}) does not have",
                                s.name, s.property, host.name, c.name
                            ),
                        ));
                    }
                }
            }
            g.connections.push((a.name.clone(), b.name.clone()));
        }
    }
    for s in g.sensors.keys() {
        match hosts.get(s).copied().unwrap_or(0) {
            1 => {}
            0 => diags.push(Diagnostic::error(
                decl.domain.span.0,
                format!("sensing point `{s}` is not attached to any component"),
            )),
            n => diags.push(Diagnostic::error(
                decl.domain.span.0,
                format!("sensing point `{s}` is attached to {n} components"),
            )),
        }
    }

    if diags.is_empty() {
        Ok(g)
    } else {
        Err(diags)
    }
}

fn instance_names(instances: &[(Named, Option<Named>)]) -> String {
    instances
        .iter()
        .map(|(n, _)| n.name.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}
