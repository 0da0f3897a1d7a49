//! Seeded packet-level FIFO simulation and the trace statistics the models are checked against.
//!
//! Packets are numbered from 1; index 0 of every arrival and departure vector
//! holds the sentinel `a(0) = d(0) = 0`.

mod aggregate;
mod servers;
mod sources;
pub mod stats;

pub use aggregate::aggregate_fifo;
pub use servers::{run_tandem, serve_fifo, ServerSpec, Tandem};
pub use sources::{generate_arrivals, SourceSpec};
pub use stats::EmpiricalCcdf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("invalid specification: {0}")]
    Spec(String),
    #[error("trace needs at least {need} packets, has {have}")]
    TooShort { need: usize, have: usize },
    #[error("trace has no departures; serve it first")]
    NotServed,
}

/// Arrival and (optionally) departure instants of packets `1..=N`.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketTrace {
    arrivals: Vec<f64>,
    departures: Vec<f64>,
    flows: Vec<u32>,
}

impl PacketTrace {
    /// Arrivals of packets `1..=N`, which must not decrease.
    pub fn from_arrivals(arrivals: &[f64]) -> Result<Self, SimError> {
        Self::with_flows(arrivals, vec![0; arrivals.len()])
    }

    pub fn with_flows(arrivals: &[f64], flows: Vec<u32>) -> Result<Self, SimError> {
        if arrivals.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(SimError::Spec("arrival instants must be finite and nonnegative".into()));
        }
        if arrivals.windows(2).any(|w| w[1] < w[0]) {
            return Err(SimError::Spec("arrival instants must not decrease".into()));
        }
        if flows.len() != arrivals.len() {
            return Err(SimError::Spec("one flow id per packet".into()));
        }
        let mut a = Vec::with_capacity(arrivals.len() + 1);
        a.push(0.0);
        a.extend_from_slice(arrivals);
        let mut f = Vec::with_capacity(flows.len() + 1);
        f.push(0);
        f.extend(flows);
        Ok(PacketTrace { arrivals: a, departures: Vec::new(), flows: f })
    }

    /// Number of packets, not counting the sentinel.
    pub fn len(&self) -> usize {
        self.arrivals.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `a(0..=N)` including the sentinel.
    pub fn arrivals(&self) -> &[f64] {
        &self.arrivals
    }

    /// `d(0..=N)` including the sentinel; empty before service.
    pub fn departures(&self) -> &[f64] {
        &self.departures
    }

    /// Flow id of every index; the sentinel carries 0.
    pub fn flows(&self) -> &[u32] {
        &self.flows
    }

    pub fn is_served(&self) -> bool {
        !self.departures.is_empty()
    }

    pub(crate) fn set_departures(&mut self, d: Vec<f64>) {
        debug_assert_eq!(d.len(), self.arrivals.len());
        self.departures = d;
    }

    /// The departures of this trace as the arrivals of a new one.
    pub fn departures_as_arrivals(&self) -> Result<PacketTrace, SimError> {
        if !self.is_served() {
            return Err(SimError::NotServed);
        }
        let mut t = PacketTrace::from_arrivals(&self.departures[1..])?;
        t.flows = self.flows.clone();
        Ok(t)
    }

    /// Keeps the packets of one flow, renumbered from 1.
    pub fn flow(&self, id: u32) -> PacketTrace {
        let mut a = vec![0.0];
        let mut d = vec![0.0];
        for n in 1..=self.len() {
            if self.flows[n] == id {
                a.push(self.arrivals[n]);
                if self.is_served() {
                    d.push(self.departures[n]);
                }
            }
        }
        let flows = vec![id; a.len()];
        let departures = if self.is_served() { d } else { Vec::new() };
        PacketTrace { arrivals: a, departures, flows }
    }

    /// `D(n) = d(n) - a(n)` for `n = 1..=N`.
    pub fn delays(&self) -> Result<Vec<f64>, SimError> {
        if !self.is_served() {
            return Err(SimError::NotServed);
        }
        Ok((1..=self.len()).map(|n| self.departures[n] - self.arrivals[n]).collect())
    }

    /// CSV with columns `n,flow_id,arrival,departure`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,flow_id,arrival,departure\n");
        for n in 1..=self.len() {
            let d = self.departures.get(n).map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{n},{},{},{d}\n", self.flows[n], self.arrivals[n]));
        }
        s
    }
}

/// Role of a random stream; each (role, flow, replication) triple is independent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Source = 1,
    Server = 2,
    Tie = 3,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for `(role, index, replication)` under a scenario seed.
pub fn stream_seed(seed: u64, role: Stream, index: u64, replication: u64) -> u64 {
    let mut h = splitmix(seed);
    for part in [role as u64, index, replication] {
        h = splitmix(h ^ part);
    }
    h
}

pub fn stream_rng(seed: u64, role: Stream, index: u64, replication: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, role, index, replication))
}
