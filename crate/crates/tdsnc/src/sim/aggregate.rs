use super::{PacketTrace, SimError};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// FIFO merge of several flows; simultaneous arrivals enter in random order.
///
/// Flow ids are the positions of the input traces.
pub fn aggregate_fifo(traces: &[PacketTrace], rng: &mut ChaCha8Rng) -> Result<PacketTrace, SimError> {
    if traces.is_empty() {
        return Err(SimError::Spec("nothing to aggregate".into()));
    }
    let mut all: Vec<(f64, u64, u32)> = Vec::with_capacity(traces.iter().map(|t| t.len()).sum());
    for (id, t) in traces.iter().enumerate() {
        for &a in &t.arrivals()[1..] {
            all.push((a, rng.random(), id as u32));
        }
    }
    all.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let arrivals: Vec<f64> = all.iter().map(|p| p.0).collect();
    let flows: Vec<u32> = all.iter().map(|p| p.2).collect();
    PacketTrace::with_flows(&arrivals, flows)
}
