use super::{PacketTrace, SimError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceSpec {
    /// One packet every `period`, the first at `t = period`.
    Deterministic { period: f64 },
    /// Exponential gaps with mean `1 / rate`.
    Poisson { rate: f64 },
    /// `inner` delayed as little as possible so that `a(n) - a(m) >= (T (n - m) - τ)+`.
    Gcra { t: f64, tau: f64, inner: Box<SourceSpec> },
    /// Packet `n` at `n period + U jitter` with `U` uniform on `[0, 1)` and `jitter < period`.
    Jittered { period: f64, jitter: f64 },
}

impl SourceSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(SimError::Spec(format!("{name} must be positive, got {v}")))
            }
        };
        match self {
            SourceSpec::Deterministic { period } => pos("period", *period),
            SourceSpec::Poisson { rate } => pos("rate", *rate),
            SourceSpec::Gcra { t, tau, inner } => {
                pos("T", *t)?;
                if !(*tau >= 0.0 && tau.is_finite()) {
                    return Err(SimError::Spec(format!("tau must be nonnegative, got {tau}")));
                }
                inner.validate()
            }
            SourceSpec::Jittered { period, jitter } => {
                pos("period", *period)?;
                if !(*jitter >= 0.0 && jitter < period) {
                    return Err(SimError::Spec("jitter must lie in [0, period)".into()));
                }
                Ok(())
            }
        }
    }

    /// Long-run arrival rate.
    pub fn rate(&self) -> f64 {
        match self {
            SourceSpec::Deterministic { period } | SourceSpec::Jittered { period, .. } => 1.0 / period,
            SourceSpec::Poisson { rate } => *rate,
            SourceSpec::Gcra { t, inner, .. } => inner.rate().min(1.0 / t),
        }
    }

    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        match self {
            SourceSpec::Deterministic { period } => (1..=n).map(|k| k as f64 * period).collect(),
            SourceSpec::Poisson { rate } => {
                let exp = Exp::new(*rate).expect("validated rate");
                let mut t = 0.0;
                (0..n)
                    .map(|_| {
                        t += exp.sample(rng);
                        t
                    })
                    .collect()
            }
            SourceSpec::Gcra { t, tau, inner } => shape(&inner.draw(n, rng), *t, *tau),
            SourceSpec::Jittered { period, jitter } => {
                (1..=n).map(|k| k as f64 * period + rng.random::<f64>() * jitter).collect()
            }
        }
    }
}

/// Earliest times `a'(n) >= a(n)` with `a'(n) - a'(m) >= T (n - m) - τ` for all `m < n`,
/// the sentinel `a'(0) = 0` included.
fn shape(inner: &[f64], t: f64, tau: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(inner.len());
    let mut prev = 0.0f64;
    // max over m < n of a'(m) - T m, starting from the sentinel
    let mut best = 0.0f64;
    for (i, &a) in inner.iter().enumerate() {
        let n = (i + 1) as f64;
        let v = a.max(prev).max(t * n - tau + best);
        out.push(v);
        prev = v;
        best = best.max(v - t * n);
    }
    out
}

/// `n` arrivals of `spec` drawn from `rng`.
pub fn generate_arrivals(spec: &SourceSpec, n: usize, rng: &mut ChaCha8Rng) -> Result<PacketTrace, SimError> {
    spec.validate()?;
    if n < 1 {
        return Err(SimError::TooShort { need: 1, have: 0 });
    }
    PacketTrace::from_arrivals(&spec.draw(n, rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{stream_rng, Stream};
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn deterministic_first_packet_after_one_period() {
        let t = generate_arrivals(&SourceSpec::Deterministic { period: 2.0 }, 3, &mut rng(0)).unwrap();
        assert_eq!(&t.arrivals()[1..], &[2.0, 4.0, 6.0]);
        assert!(generate_arrivals(&SourceSpec::Deterministic { period: 2.0 }, 0, &mut rng(0)).is_err());
    }

    #[test]
    fn poisson_mean_gap() {
        let t = generate_arrivals(&SourceSpec::Poisson { rate: 1.0 }, 100_000, &mut rng(1)).unwrap();
        let mean = t.arrivals()[100_000] / 100_000.0;
        assert!((mean - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn gcra_output_respects_curve_pairwise() {
        let spec = SourceSpec::Gcra { t: 2.0, tau: 3.0, inner: Box::new(SourceSpec::Poisson { rate: 1.0 }) };
        let t = generate_arrivals(&spec, 400, &mut stream_rng(3, Stream::Source, 0, 0)).unwrap();
        let a = t.arrivals();
        for n in 1..a.len() {
            for m in 0..n {
                let need = (2.0 * (n - m) as f64 - 3.0).max(0.0);
                assert!(a[n] - a[m] >= need - 1e-9, "m={m} n={n}");
            }
        }
    }

    #[test]
    fn gcra_delays_minimally() {
        // a burst at t = 1 through T = 1, τ = 0 leaves at 1, 2, 3
        assert_eq!(shape(&[1.0, 1.0, 1.0], 1.0, 0.0), vec![1.0, 2.0, 3.0]);
        // τ lets two packets through together
        assert_eq!(shape(&[5.0, 5.0, 5.0], 2.0, 2.0), vec![5.0, 5.0, 7.0]);
    }

    #[test]
    fn jitter_keeps_order() {
        let spec = SourceSpec::Jittered { period: 1.0, jitter: 0.9 };
        let t = generate_arrivals(&spec, 1000, &mut rng(2)).unwrap();
        assert!(t.arrivals().windows(2).all(|w| w[1] >= w[0]));
        assert!(SourceSpec::Jittered { period: 1.0, jitter: 1.0 }.validate().is_err());
    }
}
