//! Delay, backlog, output, concatenation, superposition and leftover-service bounds.

use crate::bounding::{ccdf_min_plus_conv, BoundError, BoundingFn};
use crate::curve::{
    horizontal_deviation, max_plus_conv, max_plus_deconv, min_plus_deconv_at, upper_pseudo_inverse,
    Curve, CurveError, Ext, GridSpec, Rounding,
};
use crate::models::{
    vbc_to_vsd, vsd_to_vbc, ModelError, ServerKind, ServerModel, TrafficKind, TrafficModel,
};
use crate::sim::PacketTrace;
use serde::{Deserialize, Serialize};

/// Tolerance on the tail-slope comparison.
pub const STABILITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub lambda_rate: f64,
    pub gamma_rate: f64,
    pub stable: bool,
}

impl std::fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "service time per packet {} exceeds inter-arrival time per packet {}",
            self.gamma_rate, self.lambda_rate
        )
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("unstable: {0}")]
    Unstable(StabilityReport),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("leftover curve is not increasing at packet {0}")]
    NotMonotone(usize),
}

/// Stable iff `slope(γ) <= slope(λ)`.
pub fn stability_check(lambda: &Curve, gamma: &Curve) -> StabilityReport {
    let (l, g) = (lambda.tail_slope(), gamma.tail_slope());
    StabilityReport { lambda_rate: l, gamma_rate: g, stable: g - l <= STABILITY_TOL }
}

fn require_stable(lambda: &Curve, gamma: &Curve) -> Result<StabilityReport, AnalysisError> {
    let r = stability_check(lambda, gamma);
    if r.stable {
        Ok(r)
    } else {
        Err(AnalysisError::Unstable(r))
    }
}

fn kinds(traffic: &TrafficModel, server: &ServerModel) -> Result<(), AnalysisError> {
    if !matches!(traffic.kind, TrafficKind::Vsd | TrafficKind::Det) {
        return Err(ModelError::Kind { expected: "vsd or det".into(), found: traffic.kind.to_string() }.into());
    }
    if !matches!(server.kind, ServerKind::Id | ServerKind::Det) {
        return Err(ModelError::Kind { expected: "id or det".into(), found: server.kind.to_string() }.into());
    }
    Ok(())
}

/// `P{D(n) > x} <= (j ⊗ h)(x - offset)` with `offset = γ ⊘ λ(0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelayBound {
    /// `γ ⊘ λ(0)`, clamped at zero.
    pub offset: f64,
    /// The deconvolution was negative and has been raised to zero.
    pub offset_clamped: bool,
    /// `j ⊗ h`, before the shift by `offset`.
    pub base: BoundingFn,
    pub stability: StabilityReport,
}

impl DelayBound {
    pub fn prob(&self, x: f64) -> f64 {
        self.base.eval(x - self.offset)
    }

    /// Smallest grid delay whose violation probability is at most `eps`.
    pub fn quantile(&self, eps: f64, grid: &GridSpec) -> Ext<f64> {
        self.base.quantile(eps, grid).map(|q| q + self.offset)
    }

    /// The shifted bound tabulated on the grid.
    pub fn tabulate(&self, grid: &GridSpec) -> BoundingFn {
        self.base.shifted(self.offset, grid)
    }
}

pub fn delay_bound(traffic: &TrafficModel, server: &ServerModel, grid: &GridSpec) -> Result<DelayBound, AnalysisError> {
    kinds(traffic, server)?;
    let stability = require_stable(&traffic.curve, &server.curve)?;
    let raw = min_plus_deconv_at(&server.curve, &traffic.curve, 0.0, grid)
        .finite()
        .ok_or(AnalysisError::Unstable(stability))?;
    let base = ccdf_min_plus_conv(&[server.bound.clone(), traffic.bound.clone()], grid)?;
    Ok(DelayBound { offset: raw.max(0.0), offset_clamped: raw < 0.0, base, stability })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacklogPoint {
    pub x: f64,
    /// `H(λ, γ + x)`.
    pub level: Ext<f64>,
    /// `(j ⊗ h)(x)`.
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacklogBound {
    pub points: Vec<BacklogPoint>,
    pub stability: StabilityReport,
}

impl BacklogBound {
    /// Tightest listed probability for exceeding `level` packets.
    pub fn prob_above(&self, level: f64) -> f64 {
        self.points
            .iter()
            .filter(|p| p.level.finite().is_some_and(|l| l <= level))
            .map(|p| p.prob)
            .fold(1.0, f64::min)
    }
}

/// Pairs `(H(λ, γ + x), (j ⊗ h)(x))` over the grid.
pub fn backlog_bound(traffic: &TrafficModel, server: &ServerModel, grid: &GridSpec) -> Result<BacklogBound, AnalysisError> {
    kinds(traffic, server)?;
    let stability = require_stable(&traffic.curve, &server.curve)?;
    let jh = ccdf_min_plus_conv(&[server.bound.clone(), traffic.bound.clone()], grid)?;
    let points = grid
        .points()
        .map(|x| BacklogPoint {
            x,
            level: horizontal_deviation(&traffic.curve, &server.curve, x, grid),
            prob: jh.eval(x),
        })
        .collect();
    Ok(BacklogBound { points, stability })
}

/// The departures have an IAT curve `λ ⊘̄ γ` with bound `j ⊗ h`.
pub fn output_characterization(
    traffic: &TrafficModel,
    server: &ServerModel,
    grid: &GridSpec,
) -> Result<TrafficModel, AnalysisError> {
    kinds(traffic, server)?;
    require_stable(&traffic.curve, &server.curve)?;
    let curve = max_plus_deconv(&traffic.curve, &server.curve, grid, Rounding::Down).curve;
    let bound = ccdf_min_plus_conv(&[server.bound.clone(), traffic.bound.clone()], grid)?;
    Ok(TrafficModel::new(TrafficKind::Iat, curve, bound))
}

/// End-to-end CS curve `γ¹ ⊗̄ ... ⊗̄ γᴺ` with bound `j¹ ⊗ ... ⊗ jᴺ`.
pub fn concatenate(servers: &[ServerModel], grid: &GridSpec) -> Result<ServerModel, AnalysisError> {
    let first = servers.first().ok_or_else(|| AnalysisError::Argument("no servers to concatenate".into()))?;
    for s in servers {
        if !matches!(s.kind, ServerKind::Cs | ServerKind::Det) {
            return Err(ModelError::Kind { expected: "cs or det".into(), found: s.kind.to_string() }.into());
        }
    }
    let mut curve = first.curve.clone();
    for s in &servers[1..] {
        curve = max_plus_conv(&curve, &s.curve, grid, Rounding::Up);
    }
    let bounds: Vec<BoundingFn> = servers.iter().map(|s| s.bound.clone()).collect();
    let bound = ccdf_min_plus_conv(&bounds, grid)?;
    let kind = if servers.iter().all(|s| s.kind == ServerKind::Det) { ServerKind::Det } else { ServerKind::Cs };
    Ok(ServerModel::new(kind, curve, bound))
}

/// Aggregate VSD model of several flows, through the space domain.
pub fn superpose(flows: &[TrafficModel], grid: &GridSpec) -> Result<TrafficModel, AnalysisError> {
    if flows.is_empty() {
        return Err(AnalysisError::Argument("no flows to superpose".into()));
    }
    let vbc: Vec<TrafficModel> = flows.iter().map(|f| vsd_to_vbc(f, grid)).collect::<Result<_, _>>()?;
    let mut alpha = vbc[0].curve.clone();
    for m in &vbc[1..] {
        alpha = alpha.sum(&m.curve);
    }
    let fs: Vec<BoundingFn> = vbc.iter().map(|m| m.bound.clone()).collect();
    let f = ccdf_min_plus_conv(&fs, grid)?;
    Ok(vbc_to_vsd(&TrafficModel::new(TrafficKind::Vbc, alpha, f), grid)?)
}

/// Service left to flow 1 by deterministic cross traffic, along one arrival trace of flow 1.
///
/// The curve at packet `n` is `γ(n + ᾱ₂(a₁(n)))`, `ᾱ₂` the upper pseudo-inverse
/// of the cross-traffic curve; past the trace it grows with `γ`'s tail slope.
pub fn leftover_service_trace(
    server: &ServerModel,
    cross: &TrafficModel,
    tagged: &PacketTrace,
) -> Result<ServerModel, AnalysisError> {
    if !matches!(server.kind, ServerKind::Id | ServerKind::Det) {
        return Err(ModelError::Kind { expected: "id or det".into(), found: server.kind.to_string() }.into());
    }
    if cross.kind != TrafficKind::Det {
        return Err(ModelError::Kind { expected: "det".into(), found: cross.kind.to_string() }.into());
    }
    let others = upper_pseudo_inverse(&cross.curve)?;
    let a = tagged.arrivals();
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(a.len());
    for (n, &t) in a.iter().enumerate() {
        let v = server.curve.at(n as f64 + others.at(t));
        if let Some(&(_, prev)) = pts.last() {
            if v < prev {
                return Err(AnalysisError::NotMonotone(n));
            }
        }
        pts.push((n as f64, v));
    }
    let curve = Curve::new(pts, server.curve.tail_slope())?.simplified();
    Ok(ServerModel::new(ServerKind::Id, curve, server.bound.clone()))
}

/// `n` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && n >= 1);
    if n == 1 {
        return vec![lo];
    }
    let (l, h) = (lo.ln(), hi.ln());
    let mut v: Vec<f64> = (0..n).map(|i| (l + (h - l) * i as f64 / (n - 1) as f64).exp()).collect();
    v[0] = lo;
    v[n - 1] = hi;
    v
}

/// The candidate whose delay bound has the smallest `eps`-quantile.
///
/// Candidates that fail (for example, an η that destabilizes the pair) are skipped.
pub fn auto_eta<F>(etas: &[f64], eps: f64, grid: &GridSpec, build: F) -> Option<(f64, DelayBound)>
where
    F: Fn(f64) -> Result<DelayBound, AnalysisError>,
{
    let mut best: Option<(f64, DelayBound, Ext<f64>)> = None;
    for &eta in etas {
        let Ok(b) = build(eta) else { continue };
        let q = b.quantile(eps, grid);
        let better = match &best {
            None => true,
            Some((_, _, bq)) => match (q, bq) {
                (Ext::Finite(a), Ext::Finite(b)) => a < *b,
                (Ext::Finite(_), Ext::Unbounded) => true,
                _ => false,
            },
        };
        if better {
            best = Some((eta, b, q));
        }
    }
    best.map(|(e, b, _)| (e, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{constant_server, md1_vsd_arrival};

    fn grid() -> GridSpec {
        GridSpec::new(1.0, 32.0).unwrap()
    }

    fn det_traffic(c: Curve) -> TrafficModel {
        TrafficModel::new(TrafficKind::Det, c, BoundingFn::Indicator)
    }

    fn det_server(c: Curve) -> ServerModel {
        ServerModel::new(ServerKind::Det, c, BoundingFn::Indicator)
    }

    #[test]
    fn stability_examples() {
        let l = Curve::affine(1.0, 0.0).unwrap();
        assert!(stability_check(&l, &Curve::affine(0.9, 0.0).unwrap()).stable);
        assert!(!stability_check(&l, &Curve::affine(1.1, 0.0).unwrap()).stable);
        assert!(stability_check(&l, &l).stable);
    }

    #[test]
    fn deterministic_delay() {
        let t = det_traffic(Curve::affine(1.0, 0.0).unwrap());
        let s = det_server(Curve::affine(1.0, 2.0).unwrap());
        let d = delay_bound(&t, &s, &grid()).unwrap();
        assert_eq!(d.offset, 2.0);
        assert_eq!(d.prob(1.99), 1.0);
        assert_eq!(d.prob(2.0), 0.0);
        let same = delay_bound(&t, &det_server(Curve::affine(1.0, 0.0).unwrap()), &grid()).unwrap();
        assert_eq!(same.offset, 0.0);
        let fast = delay_bound(&det_traffic(Curve::affine(2.0, 0.0).unwrap()), &det_server(Curve::affine(1.0, 0.0).unwrap()), &grid()).unwrap();
        assert!(!fast.offset_clamped);
        let neg = delay_bound(&det_traffic(Curve::affine(1.0, 3.0).unwrap()), &det_server(Curve::affine(1.0, 1.0).unwrap()), &grid()).unwrap();
        assert!(neg.offset_clamped && neg.offset == 0.0);
        let bad = delay_bound(&t, &det_server(Curve::affine(1.2, 0.0).unwrap()), &grid());
        assert!(matches!(bad, Err(AnalysisError::Unstable(r)) if !r.stable));
    }

    #[test]
    fn delay_with_random_bounds_is_shifted_convolution() {
        let t = md1_vsd_arrival(1.0, 0.5).unwrap();
        let s = constant_server(0.5).unwrap();
        let d = delay_bound(&t, &s, &GridSpec::new(0.05, 10.0).unwrap()).unwrap();
        assert!((d.offset - 0.5).abs() < 1e-12);
        for x in [0.6, 1.0, 2.0] {
            assert_eq!(d.prob(x), t.bound.eval(x - d.offset));
        }
    }

    #[test]
    fn backlog_deterministic() {
        let lam = Curve::affine(1.0, 0.0).unwrap();
        let b = backlog_bound(&det_traffic(lam.clone()), &det_server(lam), &grid()).unwrap();
        for p in &b.points {
            assert_eq!(p.level, Ext::Finite(p.x.ceil()));
            assert_eq!(p.prob, 0.0);
        }
    }

    #[test]
    fn output_of_matching_curves() {
        let lam = Curve::affine(1.0, 0.0).unwrap();
        let o = output_characterization(&det_traffic(lam.clone()), &det_server(lam), &grid()).unwrap();
        for n in 0..=32 {
            assert_eq!(o.curve.at(n as f64), n as f64);
        }
        assert!(o.bound.is_indicator());
    }

    #[test]
    fn concatenation_of_constant_servers() {
        let g = grid();
        let s = det_server(Curve::affine(2.0, 0.0).unwrap());
        let c = concatenate(&[s.clone(), s.clone()], &g).unwrap();
        for n in 0..=32 {
            assert_eq!(c.curve.at(n as f64), 2.0 * n as f64);
        }
        assert_eq!(concatenate(&[s.clone()], &g).unwrap().curve, s.curve);
        assert!(concatenate(&[], &g).is_err());
        // the concatenated pair gives the same delay as one server with γ¹ ⊗̄ γ²
        let t = constant_server(1.0).unwrap();
        let two = concatenate(&[t.clone(), t.clone()], &g).unwrap();
        let direct = det_server(max_plus_conv(&t.curve, &t.curve, &g, Rounding::Up));
        let src = det_traffic(Curve::affine(2.5, 0.0).unwrap());
        let a = delay_bound(&src, &ServerModel { kind: ServerKind::Det, ..two }, &g).unwrap();
        let b = delay_bound(&src, &direct, &g).unwrap();
        assert_eq!(a.offset, b.offset);
        assert_eq!(a.offset, 2.0);
    }

    #[test]
    fn superposition_of_two_deterministic_flows() {
        let g = GridSpec::new(1.0, 16.0).unwrap();
        let f = det_traffic(Curve::affine(1.0, 0.0).unwrap());
        let agg = superpose(&[f.clone(), f], &g).unwrap();
        // α = 2 t, so λ(n) = n / 2
        for n in 0..=16 {
            assert_eq!(agg.curve.at(n as f64), n as f64 / 2.0);
        }
        assert!(agg.bound.is_indicator());
    }

    #[test]
    fn leftover_examples() {
        let gamma = det_server(Curve::affine(1.0, 0.0).unwrap());
        let a: Vec<f64> = (1..=10).map(|n| 2.0 * n as f64).collect();
        let trace = PacketTrace::from_arrivals(&a).unwrap();
        let cross = det_traffic(Curve::affine(2.0, 0.0).unwrap());
        let l = leftover_service_trace(&gamma, &cross, &trace).unwrap();
        for n in 0..=10 {
            assert_eq!(l.curve.at(n as f64), 2.0 * n as f64);
        }
        // a cross flow that is never ahead leaves γ unchanged
        let none = det_traffic(Curve::affine(1e9, 0.0).unwrap());
        let l = leftover_service_trace(&gamma, &none, &trace).unwrap();
        for n in 0..=10 {
            assert!((l.curve.at(n as f64) - n as f64).abs() < 1e-6);
        }
    }

    #[test]
    fn eta_selection() {
        let etas = log_grid(0.01, 1.0, 5);
        assert_eq!((etas[0], etas[4]), (0.01, 1.0));
        let g = grid();
        let pick = auto_eta(&etas, 1e-3, &g, |eta| {
            let t = det_traffic(Curve::affine(1.0, 0.0).unwrap());
            let s = det_server(Curve::affine(1.0, 10.0 * eta).unwrap());
            delay_bound(&t, &s, &g)
        })
        .unwrap();
        assert_eq!(pick.0, 0.01);
    }
}
