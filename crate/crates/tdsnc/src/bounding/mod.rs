//! Bounding functions: wide-sense decreasing tail bounds `x -> [0, 1]`.
//!
//! Every function equals 1 for `x < 0`. Tables are read as left-valued
//! staircases, so a table holding exact values of a decreasing function at its
//! grid points is an upper bound of that function everywhere.

mod examples;

pub use examples::{erlang_iat_bound, md1_vsd_bound, negbin_service_tail, wireless_lateness_bound};

use crate::curve::{Ext, GridSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BoundError {
    #[error("invalid parameter: {0}")]
    Argument(String),
    #[error("queue is unstable: load {0} >= 1")]
    Unstable(f64),
    #[error("success probability is zero (Pe = 1); no packet ever leaves")]
    Degenerate,
    #[error("bounding function has an infinite tail integral")]
    NotIntegrable,
}

/// Whether the tail integrals of a function are certified finite.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrability {
    /// Only known to be decreasing and bounded.
    G,
    /// Tail integrals of every order are finite.
    F,
}

/// Extension of a table beyond its last grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Tail {
    /// Hold the last value.
    #[default]
    Constant,
    /// `min(last, coef * exp(-rate * x))`.
    Exponential { coef: f64, rate: f64 },
}

/// Tabulated values at `i * step` for `i = 0..values.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub step: f64,
    pub values: Vec<f64>,
    #[serde(default)]
    pub tail: Tail,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpParams {
    pub a: f64,
    pub b: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErlangParams {
    pub rate: f64,
    pub count: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawBound", into = "RawBound")]
pub enum BoundingFn {
    /// `min(1, a e^{-b x})`.
    Exponential(ExpParams),
    /// 1 for `x < 0`, 0 otherwise.
    Indicator,
    /// `P{count/rate - Erlang(count, rate) > x}`.
    ErlangGap(ErlangParams),
    Table(Table),
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawBound {
    Exponential { params: ExpParams },
    Indicator,
    ErlangGap { params: ErlangParams },
    Table { table: Table },
}

impl TryFrom<RawBound> for BoundingFn {
    type Error = BoundError;
    fn try_from(raw: RawBound) -> Result<Self, BoundError> {
        let f = match raw {
            RawBound::Exponential { params } => BoundingFn::Exponential(params),
            RawBound::Indicator => BoundingFn::Indicator,
            RawBound::ErlangGap { params } => BoundingFn::ErlangGap(params),
            RawBound::Table { table } => BoundingFn::Table(table),
        };
        f.validate()?;
        Ok(f)
    }
}

impl From<BoundingFn> for RawBound {
    fn from(f: BoundingFn) -> Self {
        match f {
            BoundingFn::Exponential(params) => RawBound::Exponential { params },
            BoundingFn::Indicator => RawBound::Indicator,
            BoundingFn::ErlangGap(params) => RawBound::ErlangGap { params },
            BoundingFn::Table(table) => RawBound::Table { table },
        }
    }
}

/// `[v]_1 = min(1, v)`.
pub fn clamp_one(v: f64) -> Result<f64, BoundError> {
    if !(v >= 0.0) {
        return Err(BoundError::Argument(format!("clamp_one needs a nonnegative value, got {v}")));
    }
    Ok(v.min(1.0))
}

impl BoundingFn {
    pub fn exponential(a: f64, b: f64) -> Result<Self, BoundError> {
        let f = BoundingFn::Exponential(ExpParams { a, b });
        f.validate()?;
        Ok(f)
    }

    pub fn table(step: f64, values: Vec<f64>, tail: Tail) -> Result<Self, BoundError> {
        let f = BoundingFn::Table(Table { step, values, tail });
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<(), BoundError> {
        let bad = |m: &str| Err(BoundError::Argument(m.to_string()));
        match self {
            BoundingFn::Exponential(p) => {
                if !(p.a >= 0.0 && p.a.is_finite() && p.b > 0.0 && p.b.is_finite()) {
                    return bad("exponential bound needs a >= 0 and b > 0");
                }
            }
            BoundingFn::Indicator => {}
            BoundingFn::ErlangGap(p) => {
                if !(p.rate > 0.0 && p.rate.is_finite() && p.count >= 1) {
                    return bad("Erlang gap bound needs rate > 0 and count >= 1");
                }
            }
            BoundingFn::Table(t) => {
                if !(t.step > 0.0 && t.step.is_finite()) || t.values.is_empty() {
                    return bad("table needs a positive step and at least one value");
                }
                if t.values.iter().any(|v| !(0.0..=1.0).contains(v)) {
                    return bad("table values must lie in [0, 1]");
                }
                if t.values.windows(2).any(|w| w[1] > w[0]) {
                    return bad("table values must be wide-sense decreasing");
                }
                if let Tail::Exponential { coef, rate } = t.tail {
                    if !(coef >= 0.0 && coef.is_finite() && rate > 0.0 && rate.is_finite()) {
                        return bad("exponential tail needs coef >= 0 and rate > 0");
                    }
                }
            }
        }
        Ok(())
    }

    /// Value at `x`; 1 for every negative `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 || x.is_nan() {
            return 1.0;
        }
        match self {
            BoundingFn::Exponential(p) => (p.a * (-p.b * x).exp()).min(1.0),
            BoundingFn::Indicator => 0.0,
            BoundingFn::ErlangGap(p) => {
                let y = p.count as f64 / p.rate - x;
                if y <= 0.0 {
                    0.0
                } else {
                    statrs::function::gamma::gamma_lr(p.count as f64, p.rate * y).clamp(0.0, 1.0)
                }
            }
            BoundingFn::Table(t) => t.eval(x),
        }
    }

    pub fn integrability(&self) -> Integrability {
        match self {
            BoundingFn::Exponential(_) | BoundingFn::Indicator | BoundingFn::ErlangGap(_) => {
                Integrability::F
            }
            BoundingFn::Table(t) => match t.tail {
                Tail::Exponential { .. } => Integrability::F,
                Tail::Constant if *t.values.last().unwrap() == 0.0 => Integrability::F,
                Tail::Constant => Integrability::G,
            },
        }
    }

    /// True when the function is 0 on `x >= 0`.
    pub fn is_indicator(&self) -> bool {
        match self {
            BoundingFn::Indicator => true,
            BoundingFn::Exponential(p) => p.a == 0.0,
            BoundingFn::Table(t) => t.values[0] == 0.0,
            BoundingFn::ErlangGap(_) => false,
        }
    }

    /// Exact values at the grid points, as a table with constant extension.
    pub fn tabulate(&self, grid: &GridSpec) -> BoundingFn {
        BoundingFn::Table(Table {
            step: grid.step(),
            values: grid.points().map(|x| self.eval(x)).collect(),
            tail: Tail::Constant,
        })
    }

    /// Smallest grid point where the function is at most `eps`.
    pub fn quantile(&self, eps: f64, grid: &GridSpec) -> Ext<f64> {
        grid.points()
            .find(|&x| self.eval(x) <= eps)
            .map(Ext::Finite)
            .unwrap_or(Ext::Unbounded)
    }

    /// `∫_x^∞ f(y) dy`.
    pub fn tail_integral(&self, x: f64) -> Ext<f64> {
        assert!(x >= 0.0, "tail integral from a negative point");
        match self {
            BoundingFn::Indicator => Ext::Finite(0.0),
            BoundingFn::Exponential(p) => {
                if p.a == 0.0 {
                    return Ext::Finite(0.0);
                }
                // min(1, a e^{-bx}) switches from 1 to the exponential at x0.
                let x0 = if p.a > 1.0 { p.a.ln() / p.b } else { 0.0 };
                if x >= x0 {
                    Ext::Finite(p.a / p.b * (-p.b * x).exp())
                } else {
                    Ext::Finite((x0 - x) + 1.0 / p.b)
                }
            }
            BoundingFn::ErlangGap(p) => {
                // ∫_0^y F(v) dv = y F(y) - (k/ρ) P(k+1, ρ y) for the Erlang cdf F.
                let k = p.count as f64;
                let y = k / p.rate - x;
                if y <= 0.0 {
                    return Ext::Finite(0.0);
                }
                let g = statrs::function::gamma::gamma_lr;
                Ext::Finite((y * g(k, p.rate * y) - k / p.rate * g(k + 1.0, p.rate * y)).max(0.0))
            }
            BoundingFn::Table(t) => t.tail_integral(x),
        }
    }

    /// `[f(x) + (1/η) ∫_x^∞ f]_1`, materialized exactly where a closed form exists.
    pub fn eta_inflated(&self, eta: f64, grid: &GridSpec) -> Result<BoundingFn, BoundError> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(BoundError::Argument(format!("eta must be positive, got {eta}")));
        }
        if self.integrability() != Integrability::F {
            return Err(BoundError::NotIntegrable);
        }
        match self {
            BoundingFn::Indicator => return Ok(BoundingFn::Indicator),
            BoundingFn::Exponential(p) => {
                return BoundingFn::exponential(p.a * (1.0 + 1.0 / (eta * p.b)), p.b);
            }
            _ => {}
        }
        let mut values = Vec::with_capacity(grid.len() + 1);
        for x in grid.points() {
            let ti = self.tail_integral(x).finite().ok_or(BoundError::NotIntegrable)?;
            values.push((self.eval(x) + ti / eta).min(1.0));
        }
        fix_decreasing(&mut values);
        Ok(BoundingFn::Table(Table { step: grid.step(), values, tail: Tail::Constant }))
    }

    /// `x -> f(x - offset)` tabulated on the grid.
    pub fn shifted(&self, offset: f64, grid: &GridSpec) -> BoundingFn {
        if self.is_indicator() && offset == 0.0 {
            return BoundingFn::Indicator;
        }
        let values: Vec<f64> = grid.points().map(|x| self.eval(x - offset)).collect();
        BoundingFn::Table(Table { step: grid.step(), values, tail: Tail::Constant })
    }
}

fn fix_decreasing(values: &mut [f64]) {
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
}

impl Table {
    fn horizon(&self) -> f64 {
        (self.values.len() - 1) as f64 * self.step
    }

    fn eval(&self, x: f64) -> f64 {
        let last = *self.values.last().unwrap();
        let i = (x / self.step).floor();
        if i < (self.values.len() - 1) as f64 {
            return self.values[i as usize];
        }
        match self.tail {
            Tail::Constant => last,
            Tail::Exponential { coef, rate } => last.min(coef * (-rate * x).exp()),
        }
    }

    fn tail_integral(&self, x: f64) -> Ext<f64> {
        let k = self.values.len() - 1;
        let h = self.horizon();
        let beyond = |from: f64| -> Ext<f64> {
            let last = self.values[k];
            if last == 0.0 {
                return Ext::Finite(0.0);
            }
            match self.tail {
                Tail::Constant => Ext::Unbounded,
                Tail::Exponential { coef, rate } => {
                    let cross = if coef > last { (coef / last).ln() / rate } else { 0.0 };
                    if from < cross {
                        Ext::Finite((cross - from) * last + coef / rate * (-rate * cross).exp())
                    } else {
                        Ext::Finite(coef / rate * (-rate * from).exp())
                    }
                }
            }
        };
        if x >= h {
            return beyond(x);
        }
        let i = (x / self.step).floor() as usize;
        let mut s = ((i + 1) as f64 * self.step - x) * self.values[i];
        for v in &self.values[i + 1..k] {
            s += self.step * v;
        }
        beyond(h).map(|t| t + s)
    }
}

/// Bound for the CCDF of a sum: the infimal convolution of the marginal bounds.
///
/// Splits are restricted to grid points, which is exact for the staircase
/// reading of the tabulated inputs; the result is clamped to `[0, 1]`.
pub fn ccdf_min_plus_conv(fs: &[BoundingFn], grid: &GridSpec) -> Result<BoundingFn, BoundError> {
    let nontrivial: Vec<&BoundingFn> = fs.iter().filter(|f| !f.is_indicator()).collect();
    if fs.is_empty() {
        return Err(BoundError::Argument("min-plus convolution of an empty list".into()));
    }
    match nontrivial.len() {
        0 => return Ok(BoundingFn::Indicator),
        1 => return Ok(nontrivial[0].clone()),
        _ => {}
    }
    let mut acc: Vec<f64> = grid.points().map(|x| nontrivial[0].eval(x)).collect();
    for f in &nontrivial[1..] {
        let b: Vec<f64> = grid.points().map(|x| f.eval(x)).collect();
        acc = (0..acc.len())
            .map(|i| (0..=i).map(|j| acc[j] + b[i - j]).fold(f64::INFINITY, f64::min).min(1.0))
            .collect();
    }
    fix_decreasing(&mut acc);
    Ok(BoundingFn::Table(Table { step: grid.step(), values: acc, tail: Tail::Constant }))
}

/// Pointwise maximum of several bounds, tabulated on the grid.
pub fn pointwise_max(fs: &[BoundingFn], grid: &GridSpec) -> BoundingFn {
    let values = grid
        .points()
        .map(|x| fs.iter().map(|f| f.eval(x)).fold(0.0, f64::max))
        .collect();
    BoundingFn::Table(Table { step: grid.step(), values, tail: Tail::Constant })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(step: f64, h: f64) -> GridSpec {
        GridSpec::new(step, h).unwrap()
    }

    #[test]
    fn clamp_one_examples() {
        assert_eq!(clamp_one(0.3).unwrap(), 0.3);
        assert_eq!(clamp_one(7.0).unwrap(), 1.0);
        assert_eq!(clamp_one(1.0).unwrap(), 1.0);
        assert!(clamp_one(-0.1).is_err());
    }

    #[test]
    fn all_kinds_are_one_below_zero() {
        let fs = [
            BoundingFn::exponential(0.5, 1.0).unwrap(),
            BoundingFn::Indicator,
            erlang_iat_bound(1.0, 3).unwrap(),
            BoundingFn::table(1.0, vec![0.5, 0.2], Tail::Constant).unwrap(),
        ];
        for f in &fs {
            assert_eq!(f.eval(-1e-9), 1.0);
        }
    }

    #[test]
    fn tail_integral_examples() {
        let e = BoundingFn::exponential(1.0, 1.0).unwrap();
        for x in [0.0, 0.5, 3.0] {
            assert!((e.tail_integral(x).to_f64() - (-x).exp()).abs() < 1e-15);
        }
        assert_eq!(BoundingFn::Indicator.tail_integral(2.0), Ext::Finite(0.0));
        // a = 4, b = 2: value 1 up to ln 4 / 2, then 4 e^{-2x}
        let e = BoundingFn::exponential(4.0, 2.0).unwrap();
        let x0 = 4f64.ln() / 2.0;
        assert!((e.tail_integral(0.0).to_f64() - (x0 + 0.5)).abs() < 1e-12);
        let mut values: Vec<f64> = (0..=60).map(|k| 0.5f64.powi(k)).collect();
        values.push(0.0);
        let t = BoundingFn::table(0.25, values, Tail::Constant).unwrap();
        let want = 0.25 * (1.0 - 0.5f64.powi(61)) / 0.5;
        assert!((t.tail_integral(0.0).to_f64() - want).abs() < 1e-9);
        let flat = BoundingFn::table(1.0, vec![0.5, 0.1], Tail::Constant).unwrap();
        assert_eq!(flat.tail_integral(0.0), Ext::Unbounded);
        assert_eq!(flat.integrability(), Integrability::G);
    }

    #[test]
    fn exponential_table_tail_integrates_analytically() {
        let t = BoundingFn::table(1.0, vec![1.0, 0.5], Tail::Exponential { coef: 2.0, rate: 1.0 }).unwrap();
        // beyond x = 1: min(0.5, 2 e^{-x}); crossover at ln 4
        let cross = 4f64.ln();
        let want = 1.0 + (cross - 1.0) * 0.5 + 2.0 * (-cross).exp();
        assert!((t.tail_integral(0.0).to_f64() - want).abs() < 1e-12);
        assert_eq!(t.integrability(), Integrability::F);
    }

    #[test]
    fn convolution_of_two_exponentials() {
        let grid = g(0.5, 40.0);
        let e = BoundingFn::exponential(1.0, 1.0).unwrap();
        let c = ccdf_min_plus_conv(&[e.clone(), e], &grid).unwrap();
        for i in 0..=80 {
            let x = i as f64 * 0.5;
            let want = (2.0 * (-x / 2.0).exp()).min(1.0);
            // split at x/2 is on the grid only for even multiples of the step
            let slack = if i % 2 == 0 { 1e-12 } else { want * (0.25f64.exp() - 1.0) + 1e-12 };
            let got = c.eval(x);
            assert!(got >= want - 1e-12 && got <= want + slack, "x={x} got {got} want {want}");
        }
        assert_eq!(c.eval(0.0), 1.0);
    }

    #[test]
    fn indicator_is_identity() {
        let grid = g(1.0, 20.0);
        let h = BoundingFn::exponential(0.7, 0.3).unwrap();
        let c = ccdf_min_plus_conv(&[BoundingFn::Indicator, h.clone()], &grid).unwrap();
        for x in grid.points() {
            assert_eq!(c.eval(x), h.eval(x));
        }
        assert!(ccdf_min_plus_conv(&[], &grid).is_err());
    }

    #[test]
    fn eta_inflation_closed_forms() {
        let grid = g(1.0, 10.0);
        let e = BoundingFn::exponential(1.0, 1.0).unwrap();
        let i = e.eta_inflated(1.0, &grid).unwrap();
        for k in 0..40 {
            let x = k as f64 * 0.25;
            assert!((i.eval(x) - (2.0 * (-x).exp()).min(1.0)).abs() < 1e-15);
        }
        assert_eq!(BoundingFn::Indicator.eta_inflated(0.3, &grid).unwrap(), BoundingFn::Indicator);
        let flat = BoundingFn::table(1.0, vec![0.5, 0.1], Tail::Constant).unwrap();
        assert_eq!(flat.eta_inflated(0.5, &grid), Err(BoundError::NotIntegrable));
    }

    #[test]
    fn json_shapes() {
        let e = BoundingFn::exponential(1.0, 2.0).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"kind":"exponential","params":{"a":1.0,"b":2.0}}"#);
        assert_eq!(serde_json::from_str::<BoundingFn>(&s).unwrap(), e);
        let t: BoundingFn =
            serde_json::from_str(r#"{"kind":"table","table":{"step":1,"values":[1,0.5,0.1]}}"#).unwrap();
        assert_eq!(t.eval(1.5), 0.5);
        assert!(serde_json::from_str::<BoundingFn>(r#"{"kind":"table","table":{"step":1,"values":[0.1,0.5]}}"#).is_err());
        let i: BoundingFn = serde_json::from_str(r#"{"kind":"indicator"}"#).unwrap();
        assert_eq!(i, BoundingFn::Indicator);
    }
}
