use super::{stream_rng, PacketTrace, SimError, Stream};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerSpec {
    /// Every packet takes `t`.
    Constant { t: f64 },
    /// Slots of length `delta`; transmissions start on slot boundaries and fail with probability `pe`.
    Wireless { delta: f64, pe: f64 },
}

impl ServerSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        match *self {
            ServerSpec::Constant { t } if t > 0.0 && t.is_finite() => Ok(()),
            ServerSpec::Constant { t } => Err(SimError::Spec(format!("service time must be positive, got {t}"))),
            ServerSpec::Wireless { delta, pe } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(SimError::Spec(format!("slot length must be positive, got {delta}")));
                }
                if !(0.0..1.0).contains(&pe) {
                    return Err(SimError::Spec(format!("Pe must lie in [0, 1), got {pe}")));
                }
                Ok(())
            }
        }
    }

    /// Shortest possible service time.
    pub fn min_service(&self) -> f64 {
        match *self {
            ServerSpec::Constant { t } => t,
            ServerSpec::Wireless { delta, .. } => delta,
        }
    }

    /// Mean service time per packet.
    pub fn mean_service(&self) -> f64 {
        match *self {
            ServerSpec::Constant { t } => t,
            ServerSpec::Wireless { delta, pe } => delta / (1.0 - pe),
        }
    }
}

/// `d(n) = max[a(n), d(n-1)] + s(n)`.
///
/// A slotted link additionally waits for the next slot boundary and counts
/// time in whole slots, so departures land exactly on boundaries.
pub fn serve_fifo(arrivals: &PacketTrace, spec: &ServerSpec, rng: &mut ChaCha8Rng) -> Result<PacketTrace, SimError> {
    spec.validate()?;
    let a = arrivals.arrivals();
    let mut d = Vec::with_capacity(a.len());
    d.push(0.0);
    match *spec {
        ServerSpec::Constant { t } => {
            for n in 1..a.len() {
                let start = a[n].max(d[n - 1]);
                d.push(start + t);
            }
        }
        ServerSpec::Wireless { delta, pe } => {
            let geo = Geometric::new(1.0 - pe).expect("validated probability");
            let mut slot: u64 = 0;
            for &arr in &a[1..] {
                let first = (arr / delta - 1e-9).ceil().max(0.0) as u64;
                let start = first.max(slot);
                slot = start + 1 + geo.sample(rng);
                d.push(slot as f64 * delta);
            }
        }
    }
    let mut out = arrivals.clone();
    out.set_departures(d);
    Ok(out)
}

/// Per-node traces of a tandem; node `k` is fed by the departures of node `k - 1`.
#[derive(Clone, Debug)]
pub struct Tandem {
    pub stages: Vec<PacketTrace>,
}

impl Tandem {
    /// Arrivals at the first node paired with departures from the last.
    pub fn end_to_end(&self) -> PacketTrace {
        let mut t = self.stages[0].clone();
        t.set_departures(self.stages.last().unwrap().departures().to_vec());
        t
    }
}

/// Serves `arrivals` through `servers` in order; node `k` draws from server stream `k`.
pub fn run_tandem(
    arrivals: &PacketTrace,
    servers: &[ServerSpec],
    seed: u64,
    replication: u64,
) -> Result<Tandem, SimError> {
    if servers.is_empty() {
        return Err(SimError::Spec("tandem needs at least one server".into()));
    }
    let mut stages = Vec::with_capacity(servers.len());
    let mut input = arrivals.clone();
    for (k, s) in servers.iter().enumerate() {
        let mut rng = stream_rng(seed, Stream::Server, k as u64, replication);
        let out = serve_fifo(&input, s, &mut rng)?;
        input = out.departures_as_arrivals()?;
        stages.push(out);
    }
    Ok(Tandem { stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn constant_recursion() {
        let a = PacketTrace::from_arrivals(&[0.0, 0.5, 3.0]).unwrap();
        let d = serve_fifo(&a, &ServerSpec::Constant { t: 1.0 }, &mut rng(0)).unwrap();
        assert_eq!(&d.departures()[1..], &[1.0, 2.0, 4.0]);
    }

    #[test]
    fn error_free_link_is_constant_on_boundaries() {
        let a = PacketTrace::from_arrivals(&[1.0, 1.0, 2.0, 7.0]).unwrap();
        let w = serve_fifo(&a, &ServerSpec::Wireless { delta: 1.0, pe: 0.0 }, &mut rng(0)).unwrap();
        let c = serve_fifo(&a, &ServerSpec::Constant { t: 1.0 }, &mut rng(0)).unwrap();
        assert_eq!(w.departures(), c.departures());
    }

    #[test]
    fn mid_slot_arrival_waits_for_boundary() {
        let a = PacketTrace::from_arrivals(&[0.5]).unwrap();
        let w = serve_fifo(&a, &ServerSpec::Wireless { delta: 1.0, pe: 0.0 }, &mut rng(0)).unwrap();
        assert_eq!(w.departures()[1], 2.0);
    }

    #[test]
    fn single_packet_slots_are_geometric() {
        let a = PacketTrace::from_arrivals(&[0.0]).unwrap();
        let spec = ServerSpec::Wireless { delta: 1.0, pe: 0.5 };
        let reps = 100_000;
        let mut counts = vec![0usize; 40];
        for s in 0..reps {
            let d = serve_fifo(&a, &spec, &mut stream_rng(s, Stream::Server, 0, 0)).unwrap();
            counts[(d.departures()[1] as usize).min(39)] += 1;
        }
        let tv: f64 = (1..40)
            .map(|i| (counts[i] as f64 / reps as f64 - 0.5f64.powi(i as i32)).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv = {tv}");
    }

    #[test]
    fn tandem_of_constant_servers() {
        let a = PacketTrace::from_arrivals(&[0.0, 10.0, 20.0]).unwrap();
        let spec = ServerSpec::Constant { t: 1.5 };
        let t = run_tandem(&a, &[spec.clone(), spec.clone()], 0, 0).unwrap();
        assert_eq!(t.end_to_end().delays().unwrap(), vec![3.0, 3.0, 3.0]);
        let one = run_tandem(&a, std::slice::from_ref(&spec), 0, 0).unwrap();
        let direct = serve_fifo(&a, &spec, &mut rng(0)).unwrap();
        assert_eq!(one.end_to_end(), direct);
    }

    #[test]
    fn first_packet_through_two_links_matches_convolution() {
        // first packet: delay = S1 + S2 slots, each geometric(0.6); P{sum = 2} = 0.36
        let a = PacketTrace::from_arrivals(&[0.0]).unwrap();
        let spec = ServerSpec::Wireless { delta: 1.0, pe: 0.4 };
        let reps = 50_000;
        let hits = (0..reps)
            .filter(|&r| {
                let t = run_tandem(&a, &[spec.clone(), spec.clone()], 9, r).unwrap();
                t.end_to_end().delays().unwrap()[0] == 2.0
            })
            .count();
        let p = hits as f64 / reps as f64;
        assert!((p - 0.36).abs() < 0.01, "{p}");
    }
}
