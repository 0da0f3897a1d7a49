//! Per-packet statistics behind each model's defining inequality, and empirical CCDFs.

use super::{PacketTrace, SimError};
use crate::curve::Curve;
use serde::{Deserialize, Serialize};

/// `c_n = sup_{0<=m<=n} x(m) + curve(n - m)` for every `n`.
///
/// Shifts beyond the curve's last breakpoint are affine in `n - m`; they are
/// folded into a running maximum, so the cost is linear in the trace length
/// times the breakpoint span.
pub fn trace_max_plus(x: &[f64], curve: &Curve) -> Vec<f64> {
    let k = curve.last_x().ceil() as usize;
    let s = curve.tail_slope();
    let base = curve.at(k as f64) - s * k as f64;
    let window: Vec<f64> = (0..k.min(x.len())).map(|j| curve.at(j as f64)).collect();
    let mut out = Vec::with_capacity(x.len());
    let mut far = f64::NEG_INFINITY;
    for n in 0..x.len() {
        if n >= k {
            // m = n - k enters the affine regime
            far = far.max(x[n - k] - s * (n - k) as f64);
        }
        let mut best = far + base + s * n as f64;
        for (j, c) in window.iter().enumerate().take(n + 1) {
            best = best.max(x[n - j] + c);
        }
        out.push(best);
    }
    out
}

/// Direct `O(N²)` evaluation of [`trace_max_plus`].
pub fn trace_max_plus_brute(x: &[f64], curve: &Curve) -> Vec<f64> {
    (0..x.len())
        .map(|n| (0..=n).map(|m| x[m] + curve.at((n - m) as f64)).fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

fn need(trace: &PacketTrace, n: usize) -> Result<(), SimError> {
    if trace.len() < n {
        Err(SimError::TooShort { need: n, have: trace.len() })
    } else {
        Ok(())
    }
}

/// `λ(n - m) - [a(n) - a(m)]` for every pair `0 <= m < n` with `n - m <= max_lag`.
pub fn iat_statistic(trace: &PacketTrace, lambda: &Curve, max_lag: Option<usize>) -> Result<Vec<f64>, SimError> {
    need(trace, 2)?;
    let a = trace.arrivals();
    let lag = max_lag.unwrap_or(a.len()).min(a.len() - 1);
    let lam: Vec<f64> = (0..=lag).map(|k| lambda.at(k as f64)).collect();
    let mut out = Vec::new();
    for n in 1..a.len() {
        for k in 1..=lag.min(n) {
            out.push(lam[k] - (a[n] - a[n - k]));
        }
    }
    Ok(out)
}

/// `a ⊗̄ λ(n) - a(n)` for `n = 1..=N`.
pub fn vsd_statistic(trace: &PacketTrace, lambda: &Curve) -> Result<Vec<f64>, SimError> {
    need(trace, 2)?;
    let a = trace.arrivals();
    let c = trace_max_plus(a, lambda);
    Ok((1..a.len()).map(|n| c[n] - a[n]).collect())
}

pub fn vsd_statistic_brute(trace: &PacketTrace, lambda: &Curve) -> Result<Vec<f64>, SimError> {
    need(trace, 2)?;
    let a = trace.arrivals();
    let c = trace_max_plus_brute(a, lambda);
    Ok((1..a.len()).map(|n| c[n] - a[n]).collect())
}

/// Running maximum of the VSD statistic.
pub fn msd_statistic(trace: &PacketTrace, lambda: &Curve) -> Result<Vec<f64>, SimError> {
    Ok(running_max(vsd_statistic(trace, lambda)?))
}

/// `d(n) - a ⊗̄ γ(n)` for `n = 1..=N`.
pub fn id_statistic(trace: &PacketTrace, gamma: &Curve) -> Result<Vec<f64>, SimError> {
    need(trace, 2)?;
    if !trace.is_served() {
        return Err(SimError::NotServed);
    }
    let c = trace_max_plus(trace.arrivals(), gamma);
    let d = trace.departures();
    Ok((1..d.len()).map(|n| d[n] - c[n]).collect())
}

/// Running maximum of the ID statistic.
pub fn cs_statistic(trace: &PacketTrace, gamma: &Curve) -> Result<Vec<f64>, SimError> {
    Ok(running_max(id_statistic(trace, gamma)?))
}

fn running_max(mut v: Vec<f64>) -> Vec<f64> {
    for i in 1..v.len() {
        v[i] = v[i].max(v[i - 1]);
    }
    v
}

/// `sup_{0<=s<=t} [A(t) - A(s) - α(t - s)]` at each `t` in `times`, `A` counting arrivals in `[0, t]`.
///
/// The supremum over `s` is attained just before an arrival, giving
/// `max(0, max_{k <= A(t)} A(t) - k + 1 - α(t - a(k)))`.
pub fn vbc_statistic(trace: &PacketTrace, alpha: &Curve, times: &[f64]) -> Vec<f64> {
    let a = trace.arrivals();
    let span = alpha.last_x();
    let s = alpha.tail_slope();
    let base = alpha.at(span) - s * span;
    let mut out = Vec::with_capacity(times.len());
    let mut count = 0usize;
    // packets k with a(k) <= t - span sit in the affine regime of α
    let mut far_k = 0usize;
    let mut far = f64::NEG_INFINITY;
    for &t in times {
        while count < trace.len() && a[count + 1] <= t {
            count += 1;
        }
        while far_k < count && a[far_k + 1] <= t - span {
            far_k += 1;
            far = far.max(s * a[far_k] - far_k as f64);
        }
        let n = count as f64;
        let mut best = 0.0f64;
        if far_k > 0 {
            best = best.max(n + 1.0 - base - s * t + far);
        }
        for k in far_k + 1..=count {
            best = best.max(n - k as f64 + 1.0 - alpha.at(t - a[k]));
        }
        out.push(best);
    }
    out
}

/// `B(t) = #{n : a(n) <= t} - #{n : d(n) <= t}` at each `t` in `times` (sorted).
pub fn backlog_samples(trace: &PacketTrace, times: &[f64]) -> Result<Vec<u64>, SimError> {
    if !trace.is_served() {
        return Err(SimError::NotServed);
    }
    let a = &trace.arrivals()[1..];
    let mut d: Vec<f64> = trace.departures()[1..].to_vec();
    d.sort_by(f64::total_cmp);
    let (mut i, mut j) = (0usize, 0usize);
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < d.len() && d[j] <= t {
            j += 1;
        }
        out.push((i - j) as u64);
    }
    Ok(out)
}

/// `inf{k >= 0 : d(n - k) <= a(n)}`: packets in the system just after `a(n)` under FIFO.
pub fn backlog_at_arrivals(trace: &PacketTrace) -> Result<Vec<u64>, SimError> {
    if !trace.is_served() {
        return Err(SimError::NotServed);
    }
    let (a, d) = (trace.arrivals(), trace.departures());
    let mut out = Vec::with_capacity(trace.len());
    let mut k = 0usize;
    for n in 1..a.len() {
        // the oldest packet still present after a(n) only moves forward
        while k < n && d[k + 1] <= a[n] {
            k += 1;
        }
        out.push((n - k) as u64);
    }
    Ok(out)
}

/// Evenly spaced instants `step, 2 step, ...` up to `end`.
pub fn time_grid(step: f64, end: f64) -> Vec<f64> {
    let n = (end / step).floor() as usize;
    (1..=n).map(|i| i as f64 * step).collect()
}

/// Relative slack absorbing the rounding of differences between large timestamps.
pub const ROUNDING_TOL: f64 = 1e-9;

/// Counts of samples strictly above each threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCcdf {
    pub thresholds: Vec<f64>,
    pub exceed: Vec<u64>,
    pub samples: u64,
}

impl EmpiricalCcdf {
    pub fn new(thresholds: Vec<f64>) -> Self {
        let exceed = vec![0; thresholds.len()];
        EmpiricalCcdf { thresholds, exceed, samples: 0 }
    }

    pub fn from_samples(thresholds: Vec<f64>, samples: &[f64]) -> Self {
        let mut e = Self::new(thresholds);
        e.add(samples);
        e
    }

    pub fn add(&mut self, samples: &[f64]) {
        let mut sorted: Vec<f64> = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (i, &x) in self.thresholds.iter().enumerate() {
            let cut = x + ROUNDING_TOL * x.abs().max(1.0);
            let at_or_below = sorted.partition_point(|&v| v <= cut);
            self.exceed[i] += (sorted.len() - at_or_below) as u64;
        }
        self.samples += samples.len() as u64;
    }

    /// Sums the counts of two estimates over the same thresholds.
    pub fn merge(mut self, other: &EmpiricalCcdf) -> Self {
        assert_eq!(self.thresholds, other.thresholds, "merging CCDFs over different thresholds");
        for (a, b) in self.exceed.iter_mut().zip(&other.exceed) {
            *a += b;
        }
        self.samples += other.samples;
        self
    }

    pub fn freq(&self, i: usize) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.exceed[i] as f64 / self.samples as f64
        }
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.thresholds.len()).map(|i| self.freq(i)).collect()
    }
}

/// Empirical frequency below which a point is not checked.
pub const MIN_MASS: f64 = 1e-3;

/// One checked threshold of a dominance test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub x: f64,
    pub bound: f64,
    pub empirical: f64,
    pub checked: bool,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub pass: bool,
    pub rows: Vec<DominanceRow>,
}

impl Dominance {
    pub fn violations(&self) -> impl Iterator<Item = &DominanceRow> {
        self.rows.iter().filter(|r| !r.ok)
    }
}

/// Checks `emp <= bound + 2 sqrt(bound (1 - bound) / N)` wherever `emp >= 1e-3`.
pub fn dominance(emp: &EmpiricalCcdf, bound: impl Fn(f64) -> f64) -> Dominance {
    let bounds: Vec<f64> = emp.thresholds.iter().map(|&x| bound(x)).collect();
    dominance_paired(emp, &bounds)
}

/// [`dominance`] with one bound value per threshold, for thresholds that repeat.
pub fn dominance_paired(emp: &EmpiricalCcdf, bounds: &[f64]) -> Dominance {
    assert_eq!(bounds.len(), emp.thresholds.len(), "one bound per threshold");
    let n = emp.samples.max(1) as f64;
    let rows: Vec<DominanceRow> = emp
        .thresholds
        .iter()
        .zip(bounds)
        .enumerate()
        .map(|(i, (&x, &b))| {
            let e = emp.freq(i);
            let checked = e >= MIN_MASS;
            let slack = 2.0 * (b * (1.0 - b) / n).max(0.0).sqrt();
            DominanceRow { x, bound: b, empirical: e, checked, ok: !checked || e <= b + slack }
        })
        .collect();
    Dominance { pass: rows.iter().all(|r| r.ok), rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_arrivals, serve_fifo, ServerSpec, SourceSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_trace(n: usize, seed: u64) -> PacketTrace {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        generate_arrivals(&SourceSpec::Poisson { rate: 1.0 }, n, &mut rng).unwrap()
    }

    #[test]
    fn exact_spacing_has_zero_vsd() {
        let a: Vec<f64> = (1..=50).map(|n| 2.0 * n as f64).collect();
        let t = PacketTrace::from_arrivals(&a).unwrap();
        let lam = Curve::affine(2.0, 0.0).unwrap();
        assert!(vsd_statistic(&t, &lam).unwrap().iter().all(|&v| v == 0.0));
        let e = EmpiricalCcdf::from_samples(vec![0.0, 1.0], &vsd_statistic(&t, &lam).unwrap());
        assert_eq!(e.freqs(), vec![0.0, 0.0]);
    }

    #[test]
    fn incremental_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for seed in 0..20 {
            let t = random_trace(256, seed);
            let pts = vec![(0.0, 0.0), (rng.random_range(1..6) as f64, rng.random_range(0..4) as f64)];
            let mut pts = pts;
            pts.push((pts[1].0 + 3.0, pts[1].1 + 5.0));
            let lam = Curve::new(pts, rng.random_range(0.5..1.5)).unwrap();
            let fast = vsd_statistic(&t, &lam).unwrap();
            let slow = vsd_statistic_brute(&t, &lam).unwrap();
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).abs() < 1e-9, "{f} vs {s}");
            }
        }
    }

    #[test]
    fn hierarchy_of_statistics() {
        let t = random_trace(300, 5);
        let lam = Curve::affine(0.9, 0.0).unwrap();
        let vsd = vsd_statistic(&t, &lam).unwrap();
        let msd = msd_statistic(&t, &lam).unwrap();
        let a = t.arrivals();
        for n in 1..a.len() {
            assert!(msd[n - 1] >= vsd[n - 1]);
            for m in 0..n {
                assert!(vsd[n - 1] >= lam.at((n - m) as f64) - (a[n] - a[m]) - 1e-12);
            }
        }
        let served = serve_fifo(&t, &ServerSpec::Constant { t: 0.8 }, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let g = Curve::affine(0.8, 0.8).unwrap();
        let id = id_statistic(&served, &g).unwrap();
        let cs = cs_statistic(&served, &g).unwrap();
        assert!(id.iter().zip(&cs).all(|(i, c)| c >= i));
        // a constant server meets γ(n) = T (n + 1) exactly
        assert!(id.iter().all(|&v| v <= 1e-9));
    }

    #[test]
    fn backlog_definitions_agree() {
        let t = random_trace(500, 8);
        let s = serve_fifo(&t, &ServerSpec::Constant { t: 0.9 }, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let at = backlog_at_arrivals(&s).unwrap();
        let counted = backlog_samples(&s, &t.arrivals()[1..]).unwrap();
        // counting includes later packets that arrive at the same instant
        for n in 0..at.len() {
            assert!(counted[n] >= at[n]);
        }
        assert_eq!(at, counted);
    }

    #[test]
    fn spaced_service_keeps_backlog_binary() {
        let a: Vec<f64> = (1..=20).map(|n| 3.0 * n as f64).collect();
        let s = serve_fifo(&PacketTrace::from_arrivals(&a).unwrap(), &ServerSpec::Constant { t: 1.0 }, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = backlog_samples(&s, &time_grid(0.1, 60.0)).unwrap();
        assert!(b.iter().all(|&v| v <= 1));
    }

    #[test]
    fn batch_backlog_by_hand() {
        // two packets at 0.5 keep the server busy; three more arrive together at 1.0
        let a = [0.5, 0.5, 1.0, 1.0, 1.0];
        let s = serve_fifo(&PacketTrace::from_arrivals(&a).unwrap(), &ServerSpec::Constant { t: 1.0 }, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(backlog_samples(&s, &[1.0]).unwrap(), vec![5]);
        assert_eq!(backlog_samples(&s, &[1.5, 2.5]).unwrap(), vec![4, 3]);
    }

    #[test]
    fn vbc_statistic_matches_scan() {
        let t = random_trace(120, 3);
        let alpha = Curve::new(vec![(0.0, 1.0), (2.0, 2.0)], 1.1).unwrap();
        let times = time_grid(0.37, t.arrivals()[120]);
        let fast = vbc_statistic(&t, &alpha, &times);
        let a = t.arrivals();
        for (i, &tt) in times.iter().enumerate() {
            let count = |s: f64| a[1..].iter().filter(|&&v| v <= s).count() as f64;
            // s ranges over a fine grid plus points just before arrivals
            let mut cands: Vec<f64> = (0..=(tt / 0.01) as usize).map(|k| k as f64 * 0.01).collect();
            cands.extend(a[1..].iter().filter(|&&v| v <= tt).map(|&v| v - 1e-9));
            cands.push(tt);
            let brute = cands
                .iter()
                .filter(|&&s| s >= 0.0 && s <= tt)
                .map(|&s| count(tt) - count(s) - alpha.at(tt - s))
                .fold(0.0, f64::max);
            assert!((fast[i] - brute).abs() < 1e-6, "t={tt}: {} vs {brute}", fast[i]);
        }
    }

    #[test]
    fn ccdf_merge_and_dominance() {
        let a = EmpiricalCcdf::from_samples(vec![0.0, 1.0], &[0.5, 1.5, -1.0, 2.0]);
        let b = EmpiricalCcdf::from_samples(vec![0.0, 1.0], &[3.0]);
        let m = a.merge(&b);
        assert_eq!(m.exceed, vec![4, 3]);
        assert_eq!(m.samples, 5);
        assert!(dominance(&m, |_| 1.0).pass);
        assert!(!dominance(&m, |_| 0.1).pass);
    }
}
