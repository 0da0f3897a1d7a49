//! Running a scenario: bound tables, empirical CCDFs, dominance verdicts and the files they are written to.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{backlog_bound, leftover_service_trace, output_characterization, StabilityReport};
use crate::curve::Ext;
use crate::models::{ServerModel, TrafficModel};
use crate::scenario::{prepare, Prepared, Property, Scenario, ScenarioError, SimulationSpec, Subject};
use crate::sim::stats::{
    backlog_samples, cs_statistic, dominance_paired, iat_statistic, id_statistic, time_grid, vsd_statistic,
    DominanceRow,
};
use crate::sim::{
    aggregate_fifo, generate_arrivals, run_tandem, stream_rng, stream_seed, EmpiricalCcdf, PacketTrace, Stream,
};

/// Longest packet distance used for the output IAT statistic.
pub const OUTPUT_MAX_LAG: usize = 200;
/// Tagged packets per replication on which the leftover statistic is evaluated.
pub const LEFTOVER_MAX_PACKETS: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analyze,
    Simulate,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<Ext<f64>>,
    pub bound: Option<f64>,
    pub empirical: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<DominanceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub property: Property,
    pub subject: String,
    pub eta: Option<f64>,
    pub stability: Option<StabilityReport>,
    /// Hard part of the delay bound, `γ ⊘ λ(0)`.
    pub offset: Option<f64>,
    pub samples: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub rows: Vec<Row>,
    pub verdict: Option<Verdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Runtime {
    pub elapsed_s: f64,
    pub threads: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub mode: Mode,
    pub simulation: Option<SimulationSpec>,
    /// Verify mode: whether every verdict passed.
    pub pass: Option<bool>,
    pub items: Vec<Item>,
    pub runtime: Runtime,
}

fn applies(sc: &Scenario, s: &Subject, p: Property) -> bool {
    match p {
        Property::Delay | Property::Backlog | Property::Output => true,
        Property::Concatenation => s.path.len() > 1,
        Property::Superposition => s.flows.len() == 2,
        Property::Leftover => sc.leftover_ready(s),
    }
}

/// Bound column of one property: thresholds, optional levels, probabilities.
struct Bound {
    xs: Vec<f64>,
    levels: Option<Vec<Ext<f64>>>,
    probs: Vec<f64>,
    offset: Option<f64>,
    /// Output IAT model; its curve is needed by the simulation.
    output: Option<TrafficModel>,
}

fn bound_for(sc: &Scenario, s: &Subject, prep: &Prepared, p: Property) -> Result<Bound, ScenarioError> {
    let grid = &sc.grid;
    let xs: Vec<f64> = grid.points().collect();
    let err = |e| ScenarioError::Analysis { subject: s.name.clone(), source: e };
    let table = |f: &dyn Fn(f64) -> f64| xs.iter().map(|&x| f(x)).collect::<Vec<f64>>();
    let plain = |probs| Bound { xs: xs.clone(), levels: None, probs, offset: None, output: None };
    Ok(match p {
        Property::Delay => Bound { offset: Some(prep.delay.offset), ..plain(table(&|x| prep.delay.prob(x))) },
        Property::Backlog => {
            let b = backlog_bound(&prep.traffic, &prep.service, grid).map_err(err)?;
            Bound {
                levels: Some(b.points.iter().map(|q| q.level).collect()),
                ..plain(b.points.iter().map(|q| q.prob).collect())
            }
        }
        Property::Output => {
            let out = output_characterization(&prep.traffic, &prep.service, grid).map_err(err)?;
            Bound { output: Some(out.clone()), ..plain(table(&|x| out.bound.eval(x))) }
        }
        Property::Concatenation => {
            let c = prep.concatenated.as_ref().expect("paths of several nodes are concatenated");
            plain(table(&|x| c.bound.eval(x)))
        }
        Property::Superposition => plain(table(&|x| prep.traffic.bound.eval(x))),
        Property::Leftover => plain(table(&|x| prep.service.bound.eval(x))),
    })
}

/// Curves the per-replication statistics are measured against.
struct SimCurves {
    traffic: Option<TrafficModel>,
    output: Option<TrafficModel>,
    concatenated: Option<ServerModel>,
    service: Option<ServerModel>,
    cross: Option<TrafficModel>,
}

fn note(p: Property) -> Option<String> {
    match p {
        Property::Output => Some(format!("IAT statistic over packet distances up to {OUTPUT_MAX_LAG}")),
        Property::Leftover => {
            Some(format!("statistic over the first {LEFTOVER_MAX_PACKETS} tagged packets of each replication"))
        }
        _ => None,
    }
}

fn first_n(t: &PacketTrace, n: usize) -> PacketTrace {
    if t.len() <= n {
        return t.clone();
    }
    let mut out = PacketTrace::with_flows(&t.arrivals()[1..=n], t.flows()[1..=n].to_vec()).expect("prefix of a trace");
    out.set_departures(t.departures()[..=n].to_vec());
    out
}

/// One replication: an empirical CCDF per requested property, in order.
fn replicate(
    sc: &Scenario,
    sim: &SimulationSpec,
    index: usize,
    s: &Subject,
    props: &[(Property, Vec<f64>)],
    curves: &SimCurves,
    r: u64,
) -> Result<Vec<EmpiricalCcdf>, ScenarioError> {
    let sim_err = |e: crate::sim::SimError| ScenarioError::Invalid(e.to_string());
    let traces: Vec<PacketTrace> = s
        .flows
        .iter()
        .map(|&f| generate_arrivals(&sc.flows[f].source, sim.packets, &mut stream_rng(sim.seed, Stream::Source, f as u64, r)))
        .collect::<Result<_, _>>()
        .map_err(sim_err)?;
    let arrivals = if traces.len() == 1 {
        traces[0].clone()
    } else {
        let merged = aggregate_fifo(&traces, &mut stream_rng(sim.seed, Stream::Tie, index as u64, r)).map_err(sim_err)?;
        // past the first flow to run out, the merge stops being a superposition of all flows
        let end = traces.iter().map(|t| t.arrivals()[t.len()]).fold(f64::INFINITY, f64::min);
        let keep = merged.arrivals()[1..].iter().take_while(|&&a| a <= end).count();
        PacketTrace::with_flows(&merged.arrivals()[1..=keep], merged.flows()[1..=keep].to_vec()).map_err(sim_err)?
    };
    let specs: Vec<_> = s.path.iter().map(|&n| sc.nodes[n].server.clone()).collect();
    let tandem =
        run_tandem(&arrivals, &specs, stream_seed(sim.seed, Stream::Server, index as u64, 0), r).map_err(sim_err)?;
    let e2e = tandem.end_to_end();
    let mut out = Vec::with_capacity(props.len());
    for (p, thresholds) in props {
        let samples: Vec<f64> = match p {
            Property::Delay => e2e.delays().map_err(sim_err)?,
            Property::Backlog => {
                let rate: f64 = s.flows.iter().map(|&f| sc.flows[f].source.rate()).sum();
                let end = e2e.arrivals()[e2e.len()];
                let times = time_grid(1.0 / rate, end);
                backlog_samples(&e2e, &times).map_err(sim_err)?.into_iter().map(|b| b as f64).collect()
            }
            Property::Output => {
                let out_trace = tandem.stages.last().unwrap().departures_as_arrivals().map_err(sim_err)?;
                let m = curves.output.as_ref().expect("output model");
                iat_statistic(&out_trace, &m.curve, Some(OUTPUT_MAX_LAG)).map_err(sim_err)?
            }
            Property::Concatenation => {
                cs_statistic(&e2e, &curves.concatenated.as_ref().expect("concatenated model").curve).map_err(sim_err)?
            }
            Property::Superposition => {
                vsd_statistic(&arrivals, &curves.traffic.as_ref().expect("aggregate model").curve).map_err(sim_err)?
            }
            Property::Leftover => {
                let tagged = first_n(&e2e.flow(0), LEFTOVER_MAX_PACKETS);
                let server = curves.service.as_ref().expect("service model");
                let left = leftover_service_trace(server, curves.cross.as_ref().expect("cross model"), &tagged)
                    .map_err(|e| ScenarioError::Analysis { subject: s.name.clone(), source: e })?;
                id_statistic(&tagged, &left.curve).map_err(sim_err)?
            }
        };
        out.push(EmpiricalCcdf::from_samples(thresholds.clone(), &samples));
    }
    Ok(out)
}

fn simulate_subject(
    sc: &Scenario,
    sim: &SimulationSpec,
    index: usize,
    s: &Subject,
    props: &[(Property, Vec<f64>)],
    curves: &SimCurves,
) -> Result<Vec<EmpiricalCcdf>, ScenarioError> {
    let parts: Vec<Vec<EmpiricalCcdf>> = (0..sim.replications)
        .into_par_iter()
        .map(|r| replicate(sc, sim, index, s, props, curves, r))
        .collect::<Result<_, _>>()?;
    let mut it = parts.into_iter();
    let first = it.next().expect("at least one replication");
    Ok(it.fold(first, |acc, part| acc.into_iter().zip(part).map(|(a, b)| a.merge(&b)).collect()))
}

/// Runs `sc` in `mode`. Nothing is written; see [`write_outputs`].
pub fn run(sc: &Scenario, mode: Mode) -> Result<Report, ScenarioError> {
    let start = Instant::now();
    sc.validate()?;
    let sim = match (mode, sc.simulation) {
        (Mode::Analyze, _) => None,
        (_, Some(s)) => Some(s),
        (_, None) => return Err(ScenarioError::Invalid(format!("{mode:?} mode needs a simulation section"))),
    };
    let mut items = Vec::new();
    for (index, s) in sc.subjects().iter().enumerate() {
        let prep = match mode {
            Mode::Simulate => prepare(sc, s).ok(),
            _ => Some(prepare(sc, s)?),
        };
        let props: Vec<Property> = sc.analysis.iter().copied().filter(|&p| applies(sc, s, p)).collect();
        let bounds: Vec<Option<Bound>> = match (&prep, mode) {
            (Some(pr), Mode::Analyze | Mode::Verify) => {
                props.iter().map(|&p| bound_for(sc, s, pr, p).map(Some)).collect::<Result<_, _>>()?
            }
            (Some(pr), Mode::Simulate) => props.iter().map(|&p| bound_for(sc, s, pr, p).ok()).collect(),
            (None, _) => props.iter().map(|_| None).collect(),
        };
        let output = bounds.iter().flatten().find_map(|b| b.output.clone());
        // statistics that need a model curve are skipped when the models could not be built
        let runnable: Vec<bool> = props
            .iter()
            .map(|p| match p {
                Property::Delay | Property::Backlog => true,
                Property::Output => output.is_some(),
                _ => prep.is_some(),
            })
            .collect();
        let xs: Vec<f64> = sc.grid.points().collect();
        let thresholds: Vec<Vec<f64>> = props
            .iter()
            .zip(&bounds)
            .map(|(p, b)| match (p, b) {
                (Property::Backlog, Some(Bound { levels: Some(l), .. })) => {
                    l.iter().map(|v| v.finite().unwrap_or(f64::MAX)).collect()
                }
                _ => xs.clone(),
            })
            .collect();
        let empirical: Vec<Option<EmpiricalCcdf>> = match &sim {
            None => props.iter().map(|_| None).collect(),
            Some(sim) => {
                let curves = SimCurves {
                    traffic: prep.as_ref().map(|p| p.traffic.clone()),
                    output: output.clone(),
                    concatenated: prep.as_ref().and_then(|p| p.concatenated.clone()),
                    service: prep.as_ref().map(|p| p.service.clone()),
                    cross: if sc.leftover_ready(s) { sc.traffic_model(s.flows[1]).ok() } else { None },
                };
                let wanted: Vec<(Property, Vec<f64>)> = props
                    .iter()
                    .zip(&thresholds)
                    .zip(&runnable)
                    .filter(|(_, &ok)| ok)
                    .map(|((&p, t), _)| (p, t.clone()))
                    .collect();
                let mut got = simulate_subject(sc, sim, index, s, &wanted, &curves)?.into_iter();
                runnable.iter().map(|&ok| if ok { got.next() } else { None }).collect()
            }
        };
        for (((&p, bound), emp), th) in props.iter().zip(bounds).zip(empirical).zip(thresholds) {
            let verdict = match (&bound, &emp, mode) {
                (Some(b), Some(e), Mode::Verify) => {
                    let d = dominance_paired(e, &b.probs);
                    let first_violation = d.violations().next().cloned();
                    Some(Verdict {
                        pass: d.pass,
                        checked: d.rows.iter().filter(|r| r.checked).count(),
                        violations: d.violations().count(),
                        first_violation,
                    })
                }
                _ => None,
            };
            let rows = (0..th.len())
                .map(|i| Row {
                    x: bound.as_ref().map_or(xs[i], |b| b.xs[i]),
                    level: bound.as_ref().and_then(|b| b.levels.as_ref().map(|l| l[i])),
                    bound: bound.as_ref().filter(|_| mode != Mode::Simulate).map(|b| b.probs[i]),
                    empirical: emp.as_ref().map(|e| e.freq(i)),
                })
                .collect();
            items.push(Item {
                property: p,
                subject: s.name.clone(),
                eta: prep.as_ref().and_then(|q| q.eta),
                stability: prep.as_ref().map(|q| q.delay.stability),
                offset: bound.as_ref().and_then(|b| b.offset),
                samples: emp.as_ref().map(|e| e.samples),
                note: note(p),
                rows,
                verdict,
            });
        }
    }
    let pass = (mode == Mode::Verify).then(|| items.iter().all(|i| i.verdict.as_ref().is_none_or(|v| v.pass)));
    Ok(Report {
        mode,
        simulation: sim,
        pass,
        items,
        runtime: Runtime { elapsed_s: start.elapsed().as_secs_f64(), threads: rayon::current_num_threads() },
    })
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect()
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| format!("{v}"))
}

/// CSV of one item; columns depend on which of bound and empirical are present.
pub fn item_csv(item: &Item) -> String {
    let has_bound = item.rows.iter().any(|r| r.bound.is_some());
    let has_emp = item.rows.iter().any(|r| r.empirical.is_some());
    let has_level = item.rows.iter().any(|r| r.level.is_some());
    let prob_name = match item.property {
        Property::Delay | Property::Backlog => "prob",
        _ => "bound",
    };
    let mut header = vec!["x"];
    if has_level {
        header.push("level");
    }
    if has_bound {
        header.push(prob_name);
    }
    if has_emp {
        header.push("empirical");
    }
    let mut out = header.join(",");
    out.push('\n');
    for r in &item.rows {
        let mut cols = vec![format!("{}", r.x)];
        if has_level {
            cols.push(match r.level {
                Some(Ext::Finite(v)) => format!("{v}"),
                Some(Ext::Unbounded) => "inf".into(),
                None => String::new(),
            });
        }
        if has_bound {
            cols.push(fmt_opt(r.bound));
        }
        if has_emp {
            cols.push(fmt_opt(r.empirical));
        }
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

/// `report.json` plus `<property>_<subject>.csv` per item.
pub fn write_outputs(report: &Report, dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(report).expect("report serializes"))?;
    for item in &report.items {
        let name = format!("{}_{}.csv", item.property.name(), file_stem(&item.subject));
        std::fs::write(dir.join(name), item_csv(item))?;
    }
    Ok(())
}

/// Every declared model tabulated on the grid: `(file name, csv)` with columns `x,curve,bound`.
pub fn curve_tables(sc: &Scenario) -> Result<Vec<(String, String)>, ScenarioError> {
    let xs: Vec<f64> = sc.grid.points().collect();
    let table = |curve: &dyn Fn(f64) -> f64, bound: &dyn Fn(f64) -> f64| {
        let mut s = String::from("x,curve,bound\n");
        for &x in &xs {
            s.push_str(&format!("{x},{},{}\n", curve(x), bound(x)));
        }
        s
    };
    let mut out = Vec::new();
    for (i, f) in sc.flows.iter().enumerate() {
        let m = sc.traffic_model(i).map_err(|e| ScenarioError::Invalid(format!("flow {}: {e}", f.name)))?;
        out.push((format!("flow_{}.csv", file_stem(&f.name)), table(&|x| m.curve.at(x), &|x| m.bound.eval(x))));
    }
    for (i, n) in sc.nodes.iter().enumerate() {
        let m = sc.server_model(i).map_err(|e| ScenarioError::Invalid(format!("node {}: {e}", n.name)))?;
        out.push((format!("node_{}.csv", file_stem(&n.name)), table(&|x| m.curve.at(x), &|x| m.bound.eval(x))));
    }
    Ok(out)
}
