//! Bounding functions for the standard source and server examples.

use super::{BoundError, BoundingFn, ErlangParams, Table, Tail};
use crate::curve::GridSpec;
use statrs::function::factorial::ln_binomial;

/// `P{k/ρ - Erlang(k, ρ) > x}`: how far `k` exponential gaps can fall short of their mean.
pub fn erlang_iat_bound(rho: f64, k: u32) -> Result<BoundingFn, BoundError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(BoundError::Argument(format!("rate must be positive, got {rho}")));
    }
    if k == 0 {
        return Err(BoundError::Argument("packet distance must be at least 1".into()));
    }
    Ok(BoundingFn::ErlangGap(ErlangParams { rate: rho, count: k }))
}

const MD1_LATTICE: usize = 100;
const MD1_FLOOR: f64 = 1e-15;
const MD1_MAX_STEPS: usize = 4_000_000;

/// Waiting-time CCDF of the stationary M/D/1 queue with arrival rate `mu` and service time `d`.
///
/// The residual service times in the Pollaczek-Khinchine sum are rounded up
/// to a lattice of `d / 100`, which can only lengthen the wait, so the table
/// is an upper bound of the exact CCDF. Beyond the table the decay is the
/// exact geometric rate of the lattice recursion.
pub fn md1_vsd_bound(mu: f64, d: f64) -> Result<BoundingFn, BoundError> {
    if !(mu > 0.0 && mu.is_finite() && d > 0.0 && d.is_finite()) {
        return Err(BoundError::Argument("M/D/1 needs positive rate and service time".into()));
    }
    let rho = mu * d;
    if rho >= 1.0 {
        return Err(BoundError::Unstable(rho));
    }
    let m = MD1_LATTICE;
    let step = d / m as f64;
    // G_i = P{W > i step} = (ρ/M) Σ_{j=1..M} G_{i-j}, with G = 1 on negative indices.
    let mut g: Vec<f64> = Vec::new();
    let mut window = m as f64;
    let at = |g: &Vec<f64>, i: isize| if i < 0 { 1.0 } else { g[i as usize] };
    while g.len() < MD1_MAX_STEPS {
        let i = g.len() as isize;
        let v = rho / m as f64 * window;
        g.push(v);
        window += v - at(&g, i - m as isize);
        if v < MD1_FLOOR && g.len() > m {
            break;
        }
    }
    let theta = lattice_decay_rate(rho, m, step);
    // Every later value obeys G_i <= c e^{-θ i step} once the last window does.
    let n = g.len();
    let c = (n - m..n)
        .map(|i| g[i] * (theta * i as f64 * step).exp())
        .fold(0.0, f64::max)
        * (theta * step).exp();
    Ok(BoundingFn::Table(Table { step, values: g, tail: Tail::Exponential { coef: c, rate: theta } }))
}

/// Positive root of `(ρ/M) Σ_{j=1..M} e^{θ j step} = 1`.
fn lattice_decay_rate(rho: f64, m: usize, step: f64) -> f64 {
    let f = |t: f64| rho / m as f64 * (1..=m).map(|j| (t * j as f64 * step).exp()).sum::<f64>() - 1.0;
    let mut hi = 1.0 / step;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// `P{Δ(1) + ... + Δ(n) > slots}` for i.i.d. geometric slot counts with failure probability `pe`.
///
/// Equivalently, fewer than `n` successes in `slots` Bernoulli trials.
pub fn negbin_service_tail(pe: f64, n: u64, slots: u64) -> Result<f64, BoundError> {
    if !(0.0..=1.0).contains(&pe) {
        return Err(BoundError::Argument(format!("error probability must lie in [0, 1), got {pe}")));
    }
    if pe == 1.0 {
        return Err(BoundError::Degenerate);
    }
    if n == 0 {
        return Err(BoundError::Argument("packet count must be at least 1".into()));
    }
    if slots < n {
        return Ok(1.0);
    }
    if pe == 0.0 {
        return Ok(0.0);
    }
    let (lq, lp) = ((1.0 - pe).ln(), pe.ln());
    let log_term = |k: u64| ln_binomial(slots, k) + k as f64 * lq + (slots - k) as f64 * lp;
    let mode = (slots as f64 * (1.0 - pe)).floor() as u64;
    let mut sum = 0.0;
    let mut k = n - 1;
    loop {
        let t = log_term(k).exp();
        sum += t;
        if k == 0 || (k <= mode && t < 1e-18 * sum) {
            break;
        }
        k -= 1;
    }
    Ok(sum.min(1.0))
}

/// Lateness bound of a slotted link against `γ(k) = δ + r (k + 1)`.
///
/// A backlogged link needs `δ S_k` to clear `k` packets, `S_k` negative
/// binomial, plus at most one slot of alignment when the busy period starts.
/// The lateness of a packet is therefore at most `sup_k δ S_k - r k`, and
/// the union bound over `k` is summed exactly up to an index where a
/// Chernoff estimate of the remainder is negligible.
pub fn wireless_lateness_bound(
    delta: f64,
    pe: f64,
    rate: f64,
    grid: &GridSpec,
) -> Result<BoundingFn, BoundError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(BoundError::Argument(format!("slot length must be positive, got {delta}")));
    }
    if !(0.0..=1.0).contains(&pe) {
        return Err(BoundError::Argument(format!("error probability must lie in [0, 1), got {pe}")));
    }
    if pe == 1.0 {
        return Err(BoundError::Degenerate);
    }
    if pe == 0.0 && rate >= delta {
        return Ok(BoundingFn::Indicator);
    }
    let mean = delta / (1.0 - pe);
    if !(rate > mean) {
        return Err(BoundError::Argument(format!(
            "service rate {rate} must exceed the mean service time {mean}"
        )));
    }
    // θ minimizing φ(θ) = E[e^{θ(δΔ - r)}].
    let theta = if pe == 0.0 { 1.0 / delta } else { ((1.0 - delta / rate) / pe).ln() / delta };
    let phi = (-theta * rate).exp() * (1.0 - pe) * (theta * delta).exp() / (1.0 - pe * (theta * delta).exp());
    let remainder = |x: f64, k: u64| (-theta * x).exp() * phi.powf(k as f64 + 1.0) / (1.0 - phi);
    let mut values = Vec::with_capacity(grid.len() + 1);
    for x in grid.points() {
        let mut sum = 0.0;
        let mut k = 0u64;
        loop {
            k += 1;
            let slots = ((x + rate * k as f64) / delta + 1e-9).floor() as u64;
            sum += negbin_service_tail(pe, k, slots)?;
            let rest = remainder(x, k);
            if sum >= 1.0 || rest <= 1e-12 || rest <= 1e-4 * sum || k >= 100_000 {
                values.push((sum + rest).min(1.0));
                break;
            }
        }
    }
    super::fix_decreasing(&mut values);
    let coef = phi / (1.0 - phi);
    BoundingFn::table(grid.step(), values, Tail::Exponential { coef, rate: theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn erlang_single_gap_is_exponential_cdf() {
        let f = erlang_iat_bound(1.0, 1).unwrap();
        for i in 0..=20 {
            let x = i as f64 * 0.05;
            assert!((f.eval(x) - (1.0 - (-(1.0 - x)).exp())).abs() < 1e-12, "x={x}");
        }
        assert_eq!(f.eval(1.0), 0.0);
        assert_eq!(f.eval(3.0), 0.0);
        assert!(erlang_iat_bound(0.0, 1).is_err());
        assert!(erlang_iat_bound(-1.0, 2).is_err());
    }

    #[test]
    fn erlang_two_gaps_against_monte_carlo() {
        let f = erlang_iat_bound(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let hits = (0..n)
            .filter(|_| {
                let s: f64 = (0..2).map(|_| -(1.0 - rng.random::<f64>()).ln()).sum();
                2.0 - s > 0.5
            })
            .count();
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((p - f.eval(0.5)).abs() < 3.0 * se, "mc {p} vs {}", f.eval(0.5));
    }

    #[test]
    fn erlang_tail_integral_matches_quadrature() {
        let f = erlang_iat_bound(0.7, 3).unwrap();
        for x0 in [0.0f64, 1.0, 2.5] {
            let h = 1e-4;
            let upper: f64 = 3.0 / 0.7;
            let steps = ((upper - x0) / h).ceil() as usize;
            let quad: f64 = (0..steps).map(|i| f.eval(x0 + (i as f64 + 0.5) * h) * h).sum();
            assert!((f.tail_integral(x0).to_f64() - quad).abs() < 1e-6);
        }
    }

    /// Classical alternating form of the M/D/1 waiting-time distribution.
    fn md1_exact_ccdf(mu: f64, d: f64, x: f64) -> f64 {
        let rho = mu * d;
        let mut cdf = 0.0;
        let mut fact = 1.0;
        for k in 0..=(x / d).floor() as i32 {
            if k > 0 {
                fact *= k as f64;
            }
            let u = mu * (k as f64 * d - x);
            cdf += u.powi(k) / fact * (-u).exp();
        }
        1.0 - (1.0 - rho) * cdf
    }

    #[test]
    fn md1_dominates_the_exact_distribution_closely() {
        let f = md1_vsd_bound(1.0, 0.5).unwrap();
        assert!((f.eval(0.0) - 0.5).abs() < 1e-12);
        for i in 0..=40 {
            let x = i as f64 * 0.1;
            let exact = md1_exact_ccdf(1.0, 0.5, x);
            let got = f.eval(x);
            assert!(got >= exact - 1e-12, "x={x}: {got} < {exact}");
            assert!(got - exact < 0.02, "x={x}: {got} vs {exact}");
        }
    }

    #[test]
    fn md1_against_lindley_simulation() {
        let (mu, d) = (1.0, 0.5);
        let f = md1_vsd_bound(mu, d).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 1_000_000;
        let mut w = 0.0f64;
        let mut waits = Vec::with_capacity(n);
        for _ in 0..n {
            let gap = -(1.0 - rng.random::<f64>()).ln() / mu;
            w = (w + d - gap).max(0.0);
            waits.push(w);
        }
        for x in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let p = waits.iter().filter(|&&v| v > x).count() as f64 / n as f64;
            assert!((p - md1_exact_ccdf(mu, d, x)).abs() < 0.01, "x={x}: {p}");
            assert!(p <= f.eval(x) + 0.01);
        }
    }

    #[test]
    fn md1_tail_and_limits() {
        let f = md1_vsd_bound(1.0, 0.5).unwrap();
        // mean wait ρD / (2(1-ρ)) = 0.25
        assert!(f.eval(24.0 * 0.25) <= 1e-6);
        assert!(f.eval(1e3) < 1e-100);
        assert_eq!(f.integrability(), super::super::Integrability::F);
        let tiny = md1_vsd_bound(1.0, 1e-6).unwrap();
        assert!(tiny.eval(1e-3) < 1e-12);
        assert!(matches!(md1_vsd_bound(2.0, 0.5), Err(BoundError::Unstable(_))));
    }

    #[test]
    fn negbin_examples() {
        for s in 0..30 {
            let want = if s == 0 { 1.0 } else { 0.5f64.powi(s as i32) };
            assert!((negbin_service_tail(0.5, 1, s).unwrap() - want).abs() < 1e-14);
        }
        assert_eq!(negbin_service_tail(0.3, 5, 4).unwrap(), 1.0);
        assert!((negbin_service_tail(0.5, 2, 3).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(negbin_service_tail(1.0, 1, 3), Err(BoundError::Degenerate));
        assert_eq!(negbin_service_tail(0.0, 3, 3).unwrap(), 0.0);
    }

    #[test]
    fn negbin_pmf_sums_to_one() {
        for (n, pe) in [(1u64, 0.1), (3, 0.5), (10, 0.9)] {
            let mean = n as f64 / (1.0 - pe);
            let big = n + (50.0 * mean) as u64;
            assert!(negbin_service_tail(pe, n, big).unwrap() < 1e-9);
        }
    }

    #[test]
    fn wireless_bound_dominates_simulated_lateness() {
        let grid = GridSpec::new(1.0, 40.0).unwrap();
        let (delta, pe) = (1.0, 0.3);
        let rate = 1.1 * delta / (1.0 - pe);
        let j = wireless_lateness_bound(delta, pe, rate, &grid).unwrap();
        // sup_k δ S_k - r k over a long horizon, sampled many times
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let reps = 20_000;
        let mut samples = Vec::with_capacity(reps);
        for _ in 0..reps {
            let (mut s, mut best) = (0.0, f64::NEG_INFINITY);
            for k in 1..=2000 {
                let mut slots = 1.0;
                while rng.random::<f64>() < pe {
                    slots += 1.0;
                }
                s += delta * slots;
                best = f64::max(best, s - rate * k as f64);
            }
            samples.push(best);
        }
        for x in grid.points() {
            let p = samples.iter().filter(|&&v| v > x).count() as f64 / reps as f64;
            assert!(p <= j.eval(x) + 1e-12, "x={x}: {p} > {}", j.eval(x));
        }
        assert_eq!(wireless_lateness_bound(1.0, 0.0, 1.0, &grid).unwrap(), BoundingFn::Indicator);
        assert!(wireless_lateness_bound(1.0, 0.5, 1.5, &grid).is_err());
    }
}
