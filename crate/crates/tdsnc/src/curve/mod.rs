//! Wide-sense increasing piecewise-linear curves with an affine tail.
//!
//! A [`Curve`] stores breakpoints `(x, v)` with non-decreasing `x`. Two
//! breakpoints may share an `x`; that pair encodes a jump, and the curve's
//! [`Continuity`] decides which of the two values is taken at the jump.

mod algebra;
mod inverse;

pub use algebra::{
    max_plus_conv, max_plus_deconv, min_plus_conv, min_plus_deconv, min_plus_deconv_at,
    MaxPlusDeconv,
};
pub use inverse::{
    horizontal_deviation, lower_pseudo_inverse, sup_forward_gap, sup_growth_gap,
    upper_pseudo_inverse,
};

use serde::{Deserialize, Serialize};
use std::fmt;

/// Failures raised while building or evaluating curves.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurveError {
    #[error("curve needs at least one breakpoint")]
    Empty,
    #[error("first breakpoint must sit at x = 0, found x = {0}")]
    FirstNotAtZero(f64),
    #[error("breakpoint {index} is not finite or negative")]
    BadValue { index: usize },
    #[error("breakpoint x values decrease at index {index}")]
    Unordered { index: usize },
    #[error("values decrease at breakpoint {index}; curves must be wide-sense increasing")]
    Decreasing { index: usize },
    #[error("tail slope {0} must be finite and nonnegative")]
    BadTail(f64),
    #[error("evaluation point {0} is outside the domain x >= 0")]
    Domain(f64),
    #[error("inverse is unbounded beyond value {0} because the tail slope is zero")]
    UnboundedInverse(f64),
    #[error("grid step {step} and horizon {horizon} are invalid")]
    Grid { step: f64, horizon: f64 },
}

/// A real value or the absorbing "unbounded" marker.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ext<T = f64> {
    Finite(T),
    Unbounded,
}

impl<T> Ext<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            Ext::Finite(v) => Some(v),
            Ext::Unbounded => None,
        }
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Ext::Unbounded)
    }

    pub fn as_ref(&self) -> Ext<&T> {
        match self {
            Ext::Finite(v) => Ext::Finite(v),
            Ext::Unbounded => Ext::Unbounded,
        }
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Ext<U> {
        match self {
            Ext::Finite(v) => Ext::Finite(f(v)),
            Ext::Unbounded => Ext::Unbounded,
        }
    }
}

impl Ext<f64> {
    /// Sum with "unbounded" absorbing.
    pub fn add(self, other: Ext<f64>) -> Ext<f64> {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a + b),
            _ => Ext::Unbounded,
        }
    }

    pub fn max(self, other: Ext<f64>) -> Ext<f64> {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a.max(b)),
            _ => Ext::Unbounded,
        }
    }

    /// Real value with `+inf` standing in for "unbounded".
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Ext<f64> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(v) => write!(f, "{v}"),
            Ext::Unbounded => f.write_str("unbounded"),
        }
    }
}

/// Uniform discretization `0, step, 2 step, ..., horizon`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct GridSpec {
    step: f64,
    horizon: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    step: f64,
    horizon: f64,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = CurveError;
    fn try_from(raw: RawGrid) -> Result<Self, Self::Error> {
        GridSpec::new(raw.step, raw.horizon)
    }
}

impl GridSpec {
    /// The horizon is rounded up to a whole number of steps.
    pub fn new(step: f64, horizon: f64) -> Result<Self, CurveError> {
        if !(step.is_finite() && step > 0.0 && horizon.is_finite() && horizon > 0.0) {
            return Err(CurveError::Grid { step, horizon });
        }
        let n = (horizon / step - 1e-9).ceil().max(1.0);
        Ok(GridSpec { step, horizon: n * step })
    }

    /// Unit step with a horizon of four times the largest breakpoint among `curves`.
    pub fn covering(curves: &[&Curve]) -> Self {
        let last = curves.iter().map(|c| c.last_x()).fold(0.0, f64::max);
        GridSpec::new(1.0, (4.0 * last).max(16.0)).expect("positive horizon")
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Index of the last grid point.
    pub fn len(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.len()).map(move |i| self.point(i))
    }

    /// Same step, horizon widened to at least `horizon`.
    pub fn extended_to(&self, horizon: f64) -> GridSpec {
        if horizon <= self.horizon {
            *self
        } else {
            GridSpec::new(self.step, horizon).expect("valid extension")
        }
    }

    /// Smallest grid index whose point is at or beyond `x`.
    pub fn ceil_index(&self, x: f64) -> usize {
        (x / self.step - 1e-9).ceil().max(0.0) as usize
    }
}

/// Which value a jump takes at its abscissa.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuity {
    #[default]
    Right,
    Left,
}

/// How a sampled result is turned back into a curve between grid points.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    /// Linear interpolation between grid samples.
    #[default]
    Nearest,
    /// Staircase that never exceeds the samples' increasing interpolant.
    Down,
    /// Staircase that never falls below the samples' increasing interpolant.
    Up,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct Curve {
    points: Vec<(f64, f64)>,
    tail_slope: f64,
    continuity: Continuity,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    breakpoints: Vec<(f64, f64)>,
    tail_slope: f64,
    #[serde(default, skip_serializing_if = "is_right")]
    continuity: Continuity,
}

fn is_right(c: &Continuity) -> bool {
    *c == Continuity::Right
}

impl TryFrom<RawCurve> for Curve {
    type Error = CurveError;
    fn try_from(raw: RawCurve) -> Result<Self, Self::Error> {
        Curve::with_continuity(raw.breakpoints, raw.tail_slope, raw.continuity)
    }
}

impl From<Curve> for RawCurve {
    fn from(c: Curve) -> Self {
        RawCurve { breakpoints: c.points, tail_slope: c.tail_slope, continuity: c.continuity }
    }
}

impl Curve {
    pub fn new(breakpoints: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self, CurveError> {
        Self::with_continuity(breakpoints, tail_slope, Continuity::Right)
    }

    pub fn with_continuity(
        breakpoints: Vec<(f64, f64)>,
        tail_slope: f64,
        continuity: Continuity,
    ) -> Result<Self, CurveError> {
        if breakpoints.is_empty() {
            return Err(CurveError::Empty);
        }
        if !(tail_slope.is_finite() && tail_slope >= 0.0) {
            return Err(CurveError::BadTail(tail_slope));
        }
        for (i, &(x, v)) in breakpoints.iter().enumerate() {
            if !(x.is_finite() && v.is_finite() && x >= 0.0 && v >= 0.0) {
                return Err(CurveError::BadValue { index: i });
            }
        }
        if breakpoints[0].0 != 0.0 {
            return Err(CurveError::FirstNotAtZero(breakpoints[0].0));
        }
        for i in 1..breakpoints.len() {
            if breakpoints[i].0 < breakpoints[i - 1].0 {
                return Err(CurveError::Unordered { index: i });
            }
            if breakpoints[i].1 < breakpoints[i - 1].1 {
                return Err(CurveError::Decreasing { index: i });
            }
        }
        Ok(Self::normalized(breakpoints, tail_slope, continuity))
    }

    /// Drops exact duplicates, keeps only the outer pair of any run sharing an
    /// `x`, and removes a jump at the origin for right-continuous curves.
    fn normalized(points: Vec<(f64, f64)>, tail_slope: f64, continuity: Continuity) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for p in points {
            if out.last() == Some(&p) {
                continue;
            }
            let n = out.len();
            if n >= 2 && out[n - 1].0 == p.0 && out[n - 2].0 == p.0 {
                out[n - 1] = p;
                continue;
            }
            out.push(p);
        }
        if continuity == Continuity::Right && out.len() >= 2 && out[1].0 == 0.0 {
            out.remove(0);
        }
        Curve { points: out, tail_slope, continuity }
    }

    /// `rate * x + burst`.
    pub fn affine(rate: f64, burst: f64) -> Result<Self, CurveError> {
        Self::new(vec![(0.0, burst)], rate)
    }

    /// `(rate * x - latency)+`, the clipped affine form.
    pub fn rate_latency(rate: f64, latency: f64) -> Result<Self, CurveError> {
        if latency <= 0.0 {
            return Self::affine(rate, 0.0);
        }
        Self::new(vec![(0.0, 0.0), (latency, 0.0)], rate)
    }

    pub fn zero() -> Self {
        Curve { points: vec![(0.0, 0.0)], tail_slope: 0.0, continuity: Continuity::Right }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn tail_slope(&self) -> f64 {
        self.tail_slope
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn last_x(&self) -> f64 {
        self.points.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// Value at `x`; negative `x` is a domain error.
    pub fn eval(&self, x: f64) -> Result<f64, CurveError> {
        if !(x >= 0.0) {
            return Err(CurveError::Domain(x));
        }
        Ok(self.at(x))
    }

    /// Value at `x` with the convention that the curve is 0 for `x < 0`.
    pub fn at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let p = &self.points;
        let i = p.partition_point(|q| q.0 <= x);
        let j = i - 1;
        if p[j].0 == x {
            return match self.continuity {
                Continuity::Right => p[j].1,
                Continuity::Left if j > 0 && p[j - 1].0 == x => p[j - 1].1,
                Continuity::Left => p[j].1,
            };
        }
        if i == p.len() {
            return p[j].1 + self.tail_slope * (x - p[j].0);
        }
        let slope = (p[i].1 - p[j].1) / (p[i].0 - p[j].0);
        p[j].1 + slope * (x - p[j].0)
    }

    /// Limit from the left at `x > 0`; for `x <= 0` the value of the zero extension.
    pub fn left_limit(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let p = &self.points;
        let i = p.partition_point(|q| q.0 < x);
        if i < p.len() && p[i].0 == x {
            return p[i].1;
        }
        self.at(x)
    }

    /// Limit from the right at `x >= 0` (for `x < 0` the zero extension).
    pub fn right_limit(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let p = &self.points;
        let i = p.partition_point(|q| q.0 <= x);
        if p[i - 1].0 == x {
            return p[i - 1].1;
        }
        self.at(x)
    }

    /// Values at every grid point.
    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        grid.points().map(|x| self.at(x)).collect()
    }

    /// Rebuilds a curve from increasing grid samples.
    pub fn from_samples(
        grid: &GridSpec,
        values: &[f64],
        tail_slope: f64,
        rounding: Rounding,
    ) -> Result<Self, CurveError> {
        assert_eq!(values.len(), grid.len() + 1, "one sample per grid point");
        let mut v: Vec<f64> = values.iter().map(|&y| y.max(0.0)).collect();
        for i in 1..v.len() {
            if v[i] < v[i - 1] {
                v[i] = v[i - 1];
            }
        }
        let xs: Vec<f64> = grid.points().collect();
        let (points, continuity) = match rounding {
            Rounding::Nearest => (xs.iter().copied().zip(v.iter().copied()).collect(), Continuity::Right),
            Rounding::Down => {
                let mut pts = vec![(xs[0], v[0])];
                for i in 1..v.len() {
                    pts.push((xs[i], v[i - 1]));
                    pts.push((xs[i], v[i]));
                }
                (pts, Continuity::Right)
            }
            Rounding::Up => {
                let mut pts = vec![(xs[0], v[0])];
                for i in 1..v.len() {
                    pts.push((xs[i - 1], v[i]));
                    pts.push((xs[i], v[i]));
                }
                (pts, Continuity::Left)
            }
        };
        Self::with_continuity(points, tail_slope, continuity).map(|c| c.simplified())
    }

    /// Removes interior breakpoints lying on the segment through their neighbours.
    pub fn simplified(mut self) -> Self {
        if self.points.len() < 3 {
            return self;
        }
        let mut out: Vec<(f64, f64)> = vec![self.points[0]];
        for i in 1..self.points.len() - 1 {
            let a = *out.last().unwrap();
            let b = self.points[i];
            let c = self.points[i + 1];
            let jumpy = a.0 == b.0 || b.0 == c.0;
            if !jumpy && (b.1 - a.1) * (c.0 - b.0) == (c.1 - b.1) * (b.0 - a.0) {
                continue;
            }
            out.push(b);
        }
        out.push(*self.points.last().unwrap());
        if out.len() >= 2 {
            let n = out.len();
            let (a, b) = (out[n - 2], out[n - 1]);
            if a.0 < b.0 && (b.1 - a.1) == self.tail_slope * (b.0 - a.0) {
                out.pop();
            }
        }
        self.points = out;
        self
    }

    /// True when the curve has no jumps and its slopes never increase.
    pub fn is_concave(&self) -> bool {
        self.slopes().map(|s| s.windows(2).all(|w| w[1] <= w[0])).unwrap_or(false)
    }

    /// True when the curve has no jumps and its slopes never decrease.
    pub fn is_convex(&self) -> bool {
        self.slopes().map(|s| s.windows(2).all(|w| w[1] >= w[0])).unwrap_or(false)
    }

    /// Segment slopes followed by the tail slope; `None` if the curve jumps.
    fn slopes(&self) -> Option<Vec<f64>> {
        let mut s = Vec::with_capacity(self.points.len());
        for w in self.points.windows(2) {
            if w[1].0 == w[0].0 {
                return None;
            }
            s.push((w[1].1 - w[0].1) / (w[1].0 - w[0].0));
        }
        s.push(self.tail_slope);
        Some(s)
    }

    /// Finite segments as `(length, slope)`; only meaningful without jumps.
    pub(crate) fn segments(&self) -> Vec<(f64, f64)> {
        self.points
            .windows(2)
            .map(|w| {
                let dx = w[1].0 - w[0].0;
                (dx, (w[1].1 - w[0].1) / dx)
            })
            .collect()
    }

    /// Adds `rate * x`.
    pub fn plus_linear(&self, rate: f64) -> Curve {
        assert!(rate >= 0.0);
        let points = self.points.iter().map(|&(x, v)| (x, v + rate * x)).collect();
        Curve::normalized(points, self.tail_slope + rate, self.continuity)
    }

    /// The largest increasing function below `max(0, self(x) - rate * x)`.
    pub fn minus_linear_floored(&self, rate: f64) -> Curve {
        let raw: Vec<(f64, f64)> = self.points.iter().map(|&(x, v)| (x, v - rate * x)).collect();
        let tail = self.tail_slope - rate;
        if tail < 0.0 {
            return Curve::zero();
        }
        // Running minimum from the right, inserting crossing points.
        let n = raw.len();
        let mut rev: Vec<(f64, f64)> = vec![raw[n - 1]];
        let mut m = raw[n - 1].1;
        for i in (0..n - 1).rev() {
            let (x0, v0) = raw[i];
            let (x1, v1) = raw[i + 1];
            if v0 >= m {
                rev.push((x0, m));
            } else {
                if v1 > m && x1 > x0 {
                    let xc = x0 + (m - v0) * (x1 - x0) / (v1 - v0);
                    rev.push((xc, m));
                }
                rev.push((x0, v0));
                m = v0;
            }
        }
        rev.reverse();
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(rev.len() + 2);
        for k in 0..rev.len() {
            let (x, v) = rev[k];
            if v >= 0.0 {
                if k > 0 && rev[k - 1].1 < 0.0 && rev[k - 1].0 < x {
                    let (xp, vp) = rev[k - 1];
                    pts.push((xp + (0.0 - vp) * (x - xp) / (v - vp), 0.0));
                }
                pts.push((x, v));
            } else {
                pts.push((x, 0.0));
            }
        }
        let last = *pts.last().unwrap();
        if last.1 == 0.0 && rev.last().unwrap().1 < 0.0 && tail > 0.0 {
            let xr = last.0 - rev.last().unwrap().1 / tail;
            pts.push((xr, 0.0));
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut fixed: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
        for p in pts {
            let v = fixed.last().map_or(p.1, |q: &(f64, f64)| p.1.max(q.1));
            fixed.push((p.0, v));
        }
        Curve::with_continuity(fixed, tail, self.continuity).expect("envelope stays in G").simplified()
    }

    /// Pointwise sum of two curves, exact on the union of breakpoints.
    pub fn sum(&self, other: &Curve) -> Curve {
        let mut xs: Vec<f64> = self.points.iter().chain(other.points.iter()).map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let mut pts = Vec::with_capacity(2 * xs.len());
        for &x in &xs {
            let l = self.left_limit(x) + other.left_limit(x);
            let r = self.right_limit(x) + other.right_limit(x);
            if x > 0.0 && l < r {
                pts.push((x, l));
            }
            pts.push((x, r));
        }
        if pts.is_empty() || pts[0].0 != 0.0 {
            pts.insert(0, (0.0, self.at(0.0) + other.at(0.0)));
        }
        Curve::with_continuity(pts, self.tail_slope + other.tail_slope, Continuity::Right)
            .expect("sum of G curves")
            .simplified()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_evaluation() {
        let c = Curve::affine(1.0, 2.0).unwrap();
        assert_eq!(c.eval(3.0).unwrap(), 5.0);
        assert_eq!(c.eval(0.0).unwrap(), 2.0);
        assert!(matches!(c.eval(-1.0), Err(CurveError::Domain(_))));
    }

    #[test]
    fn staircase_matches_dense_tabulation() {
        // floor(t) on [0, 4] as a right-continuous staircase
        let mut pts = vec![(0.0, 0.0)];
        for k in 1..=4 {
            pts.push((k as f64, (k - 1) as f64));
            pts.push((k as f64, k as f64));
        }
        let c = Curve::new(pts, 0.0).unwrap();
        for i in 0..=400 {
            let t = i as f64 / 100.0;
            assert_eq!(c.at(t), t.floor(), "t = {t}");
        }
        assert_eq!(c.left_limit(2.0), 1.0);
        assert_eq!(c.right_limit(2.0), 2.0);
    }

    #[test]
    fn left_continuous_jump_takes_lower_value() {
        let c = Curve::with_continuity(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 3.0)], 1.0, Continuity::Left)
            .unwrap();
        assert_eq!(c.at(1.0), 1.0);
        assert_eq!(c.at(1.5), 3.5);
    }

    #[test]
    fn rejects_invalid_curves() {
        assert_eq!(Curve::new(vec![], 0.0), Err(CurveError::Empty));
        assert!(matches!(Curve::new(vec![(1.0, 0.0)], 0.0), Err(CurveError::FirstNotAtZero(_))));
        assert!(matches!(
            Curve::new(vec![(0.0, 2.0), (1.0, 1.0)], 0.0),
            Err(CurveError::Decreasing { .. })
        ));
        assert!(matches!(Curve::new(vec![(0.0, 0.0)], -1.0), Err(CurveError::BadTail(_))));
    }

    #[test]
    fn json_round_trip() {
        let c = Curve::new(vec![(0.0, 0.0), (2.0, 0.0)], 1.5).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"breakpoints":[[0.0,0.0],[2.0,0.0]],"tail_slope":1.5}"#);
        let back: Curve = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<Curve>(r#"{"breakpoints":[[0,3],[1,1]],"tail_slope":0}"#).is_err());
    }

    #[test]
    fn minus_linear_floors_and_stays_monotone() {
        let c = Curve::rate_latency(2.0, 3.0).unwrap();
        let d = c.minus_linear_floored(0.5);
        for i in 0..100 {
            let x = i as f64 * 0.25;
            let want = (c.at(x) - 0.5 * x).max(0.0);
            // envelope of a curve that is already increasing after the floor
            let expect = if x < 2.0 { 0.0 } else { want };
            assert!((d.at(x) - expect).abs() < 1e-12, "x={x} got {} want {expect}", d.at(x));
        }
        let stair = Curve::new(vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (2.0, 1.0), (2.0, 2.0)], 1.0).unwrap();
        let e = stair.minus_linear_floored(0.4);
        let mut prev = 0.0;
        for i in 0..200 {
            let x = i as f64 * 0.05;
            let v = e.at(x);
            assert!(v >= prev - 1e-12);
            assert!(v <= (stair.at(x) - 0.4 * x).max(0.0) + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn sum_is_exact_at_jumps() {
        let a = Curve::new(vec![(0.0, 0.0), (1.0, 0.0), (1.0, 1.0)], 0.0).unwrap();
        let b = Curve::affine(1.0, 0.0).unwrap();
        let s = a.sum(&b);
        assert_eq!(s.at(0.5), 0.5);
        assert_eq!(s.at(1.0), 2.0);
        assert_eq!(s.left_limit(1.0), 1.0);
        assert_eq!(s.at(3.0), 4.0);
    }

    #[test]
    fn grid_rounds_horizon_up() {
        let g = GridSpec::new(0.5, 3.2).unwrap();
        assert_eq!(g.horizon(), 3.5);
        assert_eq!(g.len(), 7);
        assert!(GridSpec::new(0.0, 1.0).is_err());
    }

    #[test]
    fn staircase_rounding_brackets_samples() {
        let g = GridSpec::new(1.0, 4.0).unwrap();
        let vals = [0.0, 1.0, 3.0, 4.0, 6.0];
        let up = Curve::from_samples(&g, &vals, 1.0, Rounding::Up).unwrap();
        let down = Curve::from_samples(&g, &vals, 1.0, Rounding::Down).unwrap();
        let near = Curve::from_samples(&g, &vals, 1.0, Rounding::Nearest).unwrap();
        for i in 0..=40 {
            let x = i as f64 * 0.1;
            assert!(down.at(x) <= near.at(x) + 1e-12);
            assert!(near.at(x) <= up.at(x) + 1e-12);
        }
        for (i, &v) in vals.iter().enumerate() {
            assert_eq!(up.at(i as f64), v);
            assert_eq!(down.at(i as f64), v);
        }
    }
}
