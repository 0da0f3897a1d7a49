//! Traffic and server models and the conversions between their flavors.

use crate::bounding::{
    erlang_iat_bound, md1_vsd_bound, wireless_lateness_bound, BoundError, BoundingFn, Tail,
};
use crate::curve::{
    lower_pseudo_inverse, sup_forward_gap, sup_growth_gap, upper_pseudo_inverse, Curve, CurveError,
    GridSpec,
};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("expected a {expected} model, got {found}")]
    Kind { expected: String, found: String },
    #[error("invalid parameter: {0}")]
    Argument(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficKind {
    /// Deterministic arrival curve.
    Det,
    /// Inter-arrival-time curve.
    Iat,
    /// Virtual-system-delay curve.
    Vsd,
    /// Maximum-virtual-system-delay curve.
    Msd,
    /// Virtual-backlog-centric (space domain) curve.
    Vbc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServerKind {
    Det,
    /// Inter-departure-time curve.
    Id,
    /// Constrained stochastic service curve.
    Cs,
}

impl fmt::Display for TrafficKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            TrafficKind::Det => "det",
            TrafficKind::Iat => "iat",
            TrafficKind::Vsd => "vsd",
            TrafficKind::Msd => "msd",
            TrafficKind::Vbc => "vbc",
        };
        f.write_str(s)
    }
}

impl fmt::Display for ServerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ServerKind::Det => "det",
            ServerKind::Id => "id",
            ServerKind::Cs => "cs",
        };
        f.write_str(s)
    }
}

fn indicator() -> BoundingFn {
    BoundingFn::Indicator
}

/// `λ` (packet index to time) for time-domain kinds, `α` (time to count) for VBC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficModel {
    pub kind: TrafficKind,
    pub curve: Curve,
    #[serde(default = "indicator")]
    pub bound: BoundingFn,
}

/// `γ` (packet index to time) with lateness bound `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ServerModel {
    pub kind: ServerKind,
    pub curve: Curve,
    #[serde(default = "indicator")]
    pub bound: BoundingFn,
}

impl TrafficModel {
    pub fn new(kind: TrafficKind, curve: Curve, bound: BoundingFn) -> Self {
        TrafficModel { kind, curve, bound }
    }

    fn expect(&self, kinds: &[TrafficKind]) -> Result<(), ModelError> {
        if kinds.contains(&self.kind) {
            Ok(())
        } else {
            Err(ModelError::Kind {
                expected: kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" or "),
                found: self.kind.to_string(),
            })
        }
    }

    pub fn is_deterministic(&self) -> bool {
        self.kind == TrafficKind::Det || self.bound.is_indicator()
    }
}

impl ServerModel {
    pub fn new(kind: ServerKind, curve: Curve, bound: BoundingFn) -> Self {
        ServerModel { kind, curve, bound }
    }

    fn expect(&self, kinds: &[ServerKind]) -> Result<(), ModelError> {
        if kinds.contains(&self.kind) {
            Ok(())
        } else {
            Err(ModelError::Kind {
                expected: kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(" or "),
                found: self.kind.to_string(),
            })
        }
    }
}

fn positive(name: &str, v: f64) -> Result<(), ModelError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::Argument(format!("{name} must be positive, got {v}")))
    }
}

/// GCRA-shaped traffic: `λ(n) = (T n - τ)+`.
pub fn gcra_arrival(t: f64, tau: f64) -> Result<TrafficModel, ModelError> {
    positive("T", t)?;
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(ModelError::Argument(format!("tau must be nonnegative, got {tau}")));
    }
    let curve = Curve::rate_latency(t, tau / t)?;
    Ok(TrafficModel::new(TrafficKind::Det, curve, BoundingFn::Indicator))
}

/// Poisson traffic seen through its inter-arrival gaps.
///
/// `h` is the pointwise maximum of the Erlang gap bounds over packet
/// distances up to the grid horizon. For long distances the gap bound tends
/// to 1/2 at every level, so the table never drops below 1/2.
pub fn poisson_iat_arrival(rho: f64, grid: &GridSpec) -> Result<TrafficModel, ModelError> {
    positive("rate", rho)?;
    let kmax = grid.len().max(1) as u32;
    let gaps: Vec<BoundingFn> = (1..=kmax).map(|k| erlang_iat_bound(rho, k)).collect::<Result<_, _>>()?;
    let values = grid
        .points()
        .map(|x| gaps.iter().map(|f| f.eval(x)).fold(0.5, f64::max))
        .collect();
    let h = BoundingFn::table(grid.step(), values, Tail::Constant)?;
    Ok(TrafficModel::new(TrafficKind::Iat, Curve::affine(1.0 / rho, 0.0)?, h))
}

/// Poisson traffic of rate `mu` against `λ(n) = D n`: the virtual queue is M/D/1.
pub fn md1_vsd_arrival(mu: f64, d: f64) -> Result<TrafficModel, ModelError> {
    let h = md1_vsd_bound(mu, d)?;
    Ok(TrafficModel::new(TrafficKind::Vsd, Curve::affine(d, 0.0)?, h))
}

/// Constant service time `T`: `d(n) <= a ⊗̄ γ(n)` with `γ(n) = T (n + 1)`.
pub fn constant_server(t: f64) -> Result<ServerModel, ModelError> {
    positive("service time", t)?;
    Ok(ServerModel::new(ServerKind::Det, Curve::affine(t, t)?, BoundingFn::Indicator))
}

/// Default margin of the wireless service rate over the mean service time.
pub const WIRELESS_HEADROOM: f64 = 0.1;

/// Slotted link with slot `delta` and independent per-slot loss `pe`.
///
/// `γ(n) = δ + r (n + 1)` with `r = (1 + headroom) δ / (1 - Pe)`; an error-free
/// link uses `r = δ` and is deterministic.
pub fn wireless_id_server(
    delta: f64,
    pe: f64,
    headroom: Option<f64>,
    grid: &GridSpec,
) -> Result<ServerModel, ModelError> {
    positive("slot length", delta)?;
    if !(0.0..1.0).contains(&pe) {
        if pe == 1.0 {
            return Err(BoundError::Degenerate.into());
        }
        return Err(ModelError::Argument(format!("Pe must lie in [0, 1), got {pe}")));
    }
    let headroom = headroom.unwrap_or(WIRELESS_HEADROOM);
    if pe == 0.0 {
        let curve = Curve::affine(delta, 2.0 * delta)?;
        return Ok(ServerModel::new(ServerKind::Id, curve, BoundingFn::Indicator));
    }
    positive("headroom", headroom)?;
    let rate = (1.0 + headroom) * delta / (1.0 - pe);
    let j = wireless_lateness_bound(delta, pe, rate, grid)?;
    Ok(ServerModel::new(ServerKind::Id, Curve::affine(rate, delta + rate)?, j))
}

/// IAT to VSD: `⟨λ - η n, h^η⟩` with `h^η = [h + (1/η) ∫_x^∞ h]_1`.
pub fn iat_to_vsd(m: &TrafficModel, eta: f64, grid: &GridSpec) -> Result<TrafficModel, ModelError> {
    m.expect(&[TrafficKind::Iat, TrafficKind::Det])?;
    positive("eta", eta)?;
    let bound = m.bound.eta_inflated(eta, grid)?;
    Ok(TrafficModel::new(TrafficKind::Vsd, m.curve.minus_linear_floored(eta), bound))
}

/// VSD to IAT: the same pair, read as the weaker property.
pub fn vsd_to_iat(m: &TrafficModel) -> Result<TrafficModel, ModelError> {
    m.expect(&[TrafficKind::Vsd, TrafficKind::Msd, TrafficKind::Det])?;
    Ok(TrafficModel::new(TrafficKind::Iat, m.curve.clone(), m.bound.clone()))
}

/// VBC to VSD: `λ` is the lower pseudo-inverse of `α`, `h(y) = f(sup_τ α(τ + y) - α(τ) + 1)`.
pub fn vbc_to_vsd(m: &TrafficModel, grid: &GridSpec) -> Result<TrafficModel, ModelError> {
    m.expect(&[TrafficKind::Vbc])?;
    let alpha = &m.curve;
    let lambda = lower_pseudo_inverse(alpha)?;
    let h = if m.bound.is_indicator() {
        BoundingFn::Indicator
    } else {
        let values = grid
            .points()
            .map(|y| sup_growth_gap(alpha, y).finite().map_or(0.0, |g| m.bound.eval(g)))
            .collect();
        // The growth gap is at least ρ y + 1 along the tail.
        let tail = match m.bound {
            BoundingFn::Exponential(p) if alpha.tail_slope() > 0.0 => Tail::Exponential {
                coef: p.a * (-p.b).exp(),
                rate: p.b * alpha.tail_slope(),
            },
            _ => Tail::Constant,
        };
        BoundingFn::table(grid.step(), values, tail)?
    };
    Ok(TrafficModel::new(TrafficKind::Vsd, lambda, h))
}

/// VSD to VBC: `α` is the upper pseudo-inverse of `λ`, `f(x) = h(sup_k λ(k) - λ(k - x))`.
pub fn vsd_to_vbc(m: &TrafficModel, grid: &GridSpec) -> Result<TrafficModel, ModelError> {
    m.expect(&[TrafficKind::Vsd, TrafficKind::Det])?;
    let lambda = &m.curve;
    let alpha = upper_pseudo_inverse(lambda)?;
    let f = if m.bound.is_indicator() {
        BoundingFn::Indicator
    } else {
        let values = grid
            .points()
            .map(|x| sup_forward_gap(lambda, x).finite().map_or(0.0, |g| m.bound.eval(g)))
            .collect();
        let tail = match m.bound {
            BoundingFn::Exponential(p) if lambda.tail_slope() > 0.0 => Tail::Exponential {
                coef: p.a,
                rate: p.b * lambda.tail_slope(),
            },
            _ => Tail::Constant,
        };
        BoundingFn::table(grid.step(), values, tail)?
    };
    Ok(TrafficModel::new(TrafficKind::Vbc, alpha, f))
}

/// CS to ID: the same pair, read as the weaker property.
pub fn cs_to_id(m: &ServerModel) -> Result<ServerModel, ModelError> {
    m.expect(&[ServerKind::Cs, ServerKind::Det])?;
    Ok(ServerModel::new(ServerKind::Id, m.curve.clone(), m.bound.clone()))
}

/// ID to CS: `⟨γ + η n, j^η⟩` with `j^η = [j + (1/η) ∫_x^∞ j]_1`.
pub fn id_to_cs(m: &ServerModel, eta: f64, grid: &GridSpec) -> Result<ServerModel, ModelError> {
    m.expect(&[ServerKind::Id, ServerKind::Det])?;
    positive("eta", eta)?;
    let bound = m.bound.eta_inflated(eta, grid)?;
    Ok(ServerModel::new(ServerKind::Cs, m.curve.plus_linear(eta), bound))
}
