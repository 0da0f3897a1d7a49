//! Scenario files: one JSON document drives both the bounds and the simulation that checks them.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{auto_eta, concatenate, delay_bound, log_grid, superpose, AnalysisError, DelayBound, StabilityReport};
use crate::curve::GridSpec;
use crate::models::{
    constant_server, cs_to_id, gcra_arrival, iat_to_vsd, id_to_cs, md1_vsd_arrival, poisson_iat_arrival, vbc_to_vsd,
    wireless_id_server, ModelError, ServerKind, ServerModel, TrafficKind, TrafficModel,
};
use crate::sim::{ServerSpec, SourceSpec};

/// Upper limit on `packets * replications`.
pub const MAX_SIMULATED_PACKETS: u64 = 200_000_000;

/// Candidate η values searched when the scenario asks for `"auto"`.
pub fn eta_candidates() -> Vec<f64> {
    log_grid(0.01, 1.0, 15)
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("unresolved reference in {field}: no {kind} named {name:?}")]
    Unresolved { field: String, kind: &'static str, name: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("simulation too large: {0}")]
    Resource(String),
    #[error("{subject} is unstable: arrival slope {:.6} < service slope {:.6}", .report.lambda_rate, .report.gamma_rate)]
    Stability { subject: String, report: StabilityReport },
    #[error("{subject}: {source}")]
    Analysis { subject: String, source: AnalysisError },
}

impl ScenarioError {
    /// Process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::Stability { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaName {
    Auto,
}

/// A fixed η or `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Eta {
    Fixed(f64),
    Named(EtaName),
}

impl Default for Eta {
    fn default() -> Self {
        Eta::Named(EtaName::Auto)
    }
}

/// Arrival model of a flow: a named constructor or an explicit pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrafficSpec {
    Gcra { t: f64, tau: f64 },
    Poisson { rate: f64 },
    Md1 { rate: f64, d: f64 },
    Explicit { model: TrafficModel },
}

/// Service model of a node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ServiceSpec {
    Constant {
        t: f64,
    },
    Wireless {
        delta: f64,
        pe: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        headroom: Option<f64>,
    },
    Explicit {
        model: ServerModel,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDecl {
    pub name: String,
    pub source: SourceSpec,
    pub model: TrafficSpec,
    pub path: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDecl {
    pub name: String,
    pub server: ServerSpec,
    pub model: ServiceSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Delay,
    Backlog,
    Output,
    Concatenation,
    Superposition,
    Leftover,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::Delay => "delay",
            Property::Backlog => "backlog",
            Property::Output => "output",
            Property::Concatenation => "concatenation",
            Property::Superposition => "superposition",
            Property::Leftover => "leftover",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub packets: usize,
    pub replications: u64,
    pub seed: u64,
}

fn default_eps() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub grid: GridSpec,
    #[serde(default)]
    pub eta: Eta,
    /// Violation probability at which `"auto"` compares candidate η values.
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub flows: Vec<FlowDecl>,
    pub nodes: Vec<NodeDecl>,
    /// Groups of flows merged FIFO before their shared path.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aggregates: Vec<Vec<String>>,
    pub analysis: Vec<Property>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
}

/// A flow or a FIFO aggregate of flows, with the nodes it crosses.
#[derive(Clone, Debug, PartialEq)]
pub struct Subject {
    pub name: String,
    pub flows: Vec<usize>,
    pub path: Vec<usize>,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let sc: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    sc.validate()?;
    Ok(sc)
}

impl Scenario {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn node_index(&self) -> HashMap<&str, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.name.as_str(), i)).collect()
    }

    fn flow_index(&self) -> HashMap<&str, usize> {
        self.flows.iter().enumerate().map(|(i, f)| (f.name.as_str(), i)).collect()
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        if self.flows.is_empty() {
            return invalid("at least one flow is required".into());
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if let Eta::Fixed(e) = self.eta {
            if !(e > 0.0 && e.is_finite()) {
                return invalid(format!("eta must be positive, got {e}"));
            }
        }
        let mut seen = HashSet::new();
        for name in self.flows.iter().map(|f| &f.name).chain(self.nodes.iter().map(|n| &n.name)) {
            if !seen.insert(name) {
                return invalid(format!("name {name:?} is declared twice"));
            }
        }
        let nodes = self.node_index();
        for (i, f) in self.flows.iter().enumerate() {
            f.source.validate().map_err(|e| ScenarioError::Invalid(format!("flows[{i}].source: {e}")))?;
            if f.path.is_empty() {
                return invalid(format!("flows[{i}].path is empty"));
            }
            let mut on_path = HashSet::new();
            for (k, n) in f.path.iter().enumerate() {
                if !nodes.contains_key(n.as_str()) {
                    return Err(ScenarioError::Unresolved {
                        field: format!("flows[{i}].path[{k}]"),
                        kind: "node",
                        name: n.clone(),
                    });
                }
                if !on_path.insert(n) {
                    return invalid(format!("flows[{i}].path visits {n:?} twice"));
                }
            }
            self.traffic_model(i).map_err(|e| ScenarioError::Invalid(format!("flows[{i}].model: {e}")))?;
        }
        for (i, n) in self.nodes.iter().enumerate() {
            n.server.validate().map_err(|e| ScenarioError::Invalid(format!("nodes[{i}].server: {e}")))?;
            self.server_model(i).map_err(|e| ScenarioError::Invalid(format!("nodes[{i}].model: {e}")))?;
        }
        let flows = self.flow_index();
        let mut grouped = HashSet::new();
        for (g, group) in self.aggregates.iter().enumerate() {
            if group.is_empty() || group.len() > 2 {
                return invalid(format!("aggregates[{g}] must hold one or two flows"));
            }
            for (k, name) in group.iter().enumerate() {
                let Some(&i) = flows.get(name.as_str()) else {
                    return Err(ScenarioError::Unresolved {
                        field: format!("aggregates[{g}][{k}]"),
                        kind: "flow",
                        name: name.clone(),
                    });
                };
                if !grouped.insert(i) {
                    return invalid(format!("flow {name:?} belongs to more than one aggregate"));
                }
                if self.flows[i].path != self.flows[flows[group[0].as_str()]].path {
                    return invalid(format!("flows in aggregates[{g}] must share one path"));
                }
            }
        }
        let subjects = self.subjects();
        let mut owner: HashMap<usize, usize> = HashMap::new();
        for (s, subj) in subjects.iter().enumerate() {
            for &n in &subj.path {
                if let Some(&o) = owner.get(&n) {
                    if o != s {
                        return invalid(format!(
                            "node {:?} is shared by {} and {}; declare them as an aggregate",
                            self.nodes[n].name, subjects[o].name, subj.name
                        ));
                    }
                }
                owner.insert(n, s);
            }
        }
        for &p in &self.analysis {
            match p {
                Property::Superposition if !subjects.iter().any(|s| s.flows.len() == 2) => {
                    return invalid("superposition needs an aggregate of two flows".into());
                }
                Property::Leftover => {
                    let ok = subjects.iter().any(|s| self.leftover_ready(s));
                    if !ok {
                        return invalid(
                            "leftover needs an aggregate of two flows on one node whose second flow is deterministic"
                                .into(),
                        );
                    }
                }
                _ => {}
            }
        }
        if let Some(sim) = &self.simulation {
            if sim.packets < 2 || sim.replications < 1 {
                return invalid("simulation needs at least 2 packets and 1 replication".into());
            }
            let total = sim.packets as u64 * sim.replications;
            if total > MAX_SIMULATED_PACKETS {
                return Err(ScenarioError::Resource(format!(
                    "{} packets x {} replications exceeds the cap of {MAX_SIMULATED_PACKETS}",
                    sim.packets, sim.replications
                )));
            }
        }
        Ok(())
    }

    /// Flows on their own, then declared aggregates, in declaration order.
    pub fn subjects(&self) -> Vec<Subject> {
        let flows = self.flow_index();
        let nodes = self.node_index();
        let path = |i: usize| self.flows[i].path.iter().map(|n| nodes[n.as_str()]).collect::<Vec<_>>();
        let mut grouped = HashSet::new();
        let mut out = Vec::new();
        for group in &self.aggregates {
            let idx: Vec<usize> = group.iter().map(|n| flows[n.as_str()]).collect();
            grouped.extend(idx.iter().copied());
            out.push(Subject { name: group.join("+"), path: path(idx[0]), flows: idx });
        }
        for (i, f) in self.flows.iter().enumerate() {
            if !grouped.contains(&i) {
                out.push(Subject { name: f.name.clone(), flows: vec![i], path: path(i) });
            }
        }
        out.sort_by_key(|s| s.flows[0]);
        out
    }

    pub fn leftover_ready(&self, s: &Subject) -> bool {
        s.flows.len() == 2
            && s.path.len() == 1
            && self.traffic_model(s.flows[1]).is_ok_and(|m| m.kind == TrafficKind::Det)
    }

    pub fn traffic_model(&self, flow: usize) -> Result<TrafficModel, ModelError> {
        match &self.flows[flow].model {
            TrafficSpec::Gcra { t, tau } => gcra_arrival(*t, *tau),
            TrafficSpec::Poisson { rate } => poisson_iat_arrival(*rate, &self.grid),
            TrafficSpec::Md1 { rate, d } => md1_vsd_arrival(*rate, *d),
            TrafficSpec::Explicit { model } => Ok(model.clone()),
        }
    }

    pub fn server_model(&self, node: usize) -> Result<ServerModel, ModelError> {
        match &self.nodes[node].model {
            ServiceSpec::Constant { t } => constant_server(*t),
            ServiceSpec::Wireless { delta, pe, headroom } => wireless_id_server(*delta, *pe, *headroom, &self.grid),
            ServiceSpec::Explicit { model } => Ok(model.clone()),
        }
    }
}

/// Models of one subject after every conversion the analysis needs.
#[derive(Clone, Debug)]
pub struct Prepared {
    /// VSD or deterministic arrival model (superposed for aggregates).
    pub traffic: TrafficModel,
    /// ID or deterministic model of the whole path.
    pub service: ServerModel,
    /// Concatenated CS model, for paths of more than one node.
    pub concatenated: Option<ServerModel>,
    /// The η used, if any conversion needed one.
    pub eta: Option<f64>,
    pub delay: DelayBound,
}

fn to_vsd(m: TrafficModel, eta: f64, grid: &GridSpec, used: &mut bool) -> Result<TrafficModel, ModelError> {
    match m.kind {
        TrafficKind::Vsd | TrafficKind::Det => Ok(m),
        // the running maximum dominates each term
        TrafficKind::Msd => Ok(TrafficModel::new(TrafficKind::Vsd, m.curve, m.bound)),
        TrafficKind::Iat => {
            *used = true;
            iat_to_vsd(&m, eta, grid)
        }
        TrafficKind::Vbc => vbc_to_vsd(&m, grid),
    }
}

fn to_cs(m: ServerModel, eta: f64, grid: &GridSpec, used: &mut bool) -> Result<ServerModel, ModelError> {
    match m.kind {
        ServerKind::Cs | ServerKind::Det => Ok(m),
        ServerKind::Id => {
            *used = true;
            id_to_cs(&m, eta, grid)
        }
    }
}

fn analysis_error(subject: &Subject, e: AnalysisError) -> ScenarioError {
    match e {
        AnalysisError::Unstable(report) => ScenarioError::Stability { subject: subject.name.clone(), report },
        source => ScenarioError::Analysis { subject: subject.name.clone(), source },
    }
}

/// Builds the subject's models with a given η.
pub fn prepare_with(sc: &Scenario, s: &Subject, eta: f64) -> Result<Prepared, ScenarioError> {
    let grid = &sc.grid;
    let err = |e: AnalysisError| analysis_error(s, e);
    let mut used = false;
    let flows: Vec<TrafficModel> = s
        .flows
        .iter()
        .map(|&f| to_vsd(sc.traffic_model(f)?, eta, grid, &mut used))
        .collect::<Result<_, _>>()
        .map_err(|e| err(e.into()))?;
    let traffic = if flows.len() == 1 { flows.into_iter().next().unwrap() } else { superpose(&flows, grid).map_err(err)? };
    let servers: Vec<ServerModel> =
        s.path.iter().map(|&n| sc.server_model(n)).collect::<Result<_, _>>().map_err(|e| err(e.into()))?;
    let (service, concatenated) = if servers.len() == 1 {
        let m = servers.into_iter().next().unwrap();
        let m = if m.kind == ServerKind::Cs { cs_to_id(&m).map_err(|e| err(e.into()))? } else { m };
        (m, None)
    } else {
        let cs: Vec<ServerModel> = servers
            .into_iter()
            .map(|m| to_cs(m, eta, grid, &mut used))
            .collect::<Result<_, _>>()
            .map_err(|e| err(e.into()))?;
        let c = concatenate(&cs, grid).map_err(err)?;
        (cs_to_id(&c).map_err(|e| err(e.into()))?, Some(c))
    };
    let delay = delay_bound(&traffic, &service, grid).map_err(err)?;
    Ok(Prepared { traffic, service, concatenated, eta: used.then_some(eta), delay })
}

/// Builds the subject's models, choosing η by the smallest `eps`-quantile of the delay bound when asked to.
pub fn prepare(sc: &Scenario, s: &Subject) -> Result<Prepared, ScenarioError> {
    match sc.eta {
        Eta::Fixed(eta) => prepare_with(sc, s, eta),
        Eta::Named(EtaName::Auto) => {
            let cands = eta_candidates();
            let first = prepare_with(sc, s, cands[0]);
            if first.as_ref().is_ok_and(|p| p.eta.is_none()) {
                return first;
            }
            let best = auto_eta(&cands, sc.eps, &sc.grid, |eta| {
                prepare_with(sc, s, eta).map(|p| p.delay).map_err(|e| match e {
                    ScenarioError::Stability { report, .. } => AnalysisError::Unstable(report),
                    other => AnalysisError::Argument(other.to_string()),
                })
            });
            match best {
                Some((eta, _)) => prepare_with(sc, s, eta),
                // every candidate failed; report the failure of the first
                None => first,
            }
        }
    }
}
