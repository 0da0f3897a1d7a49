//! Time-domain stochastic network calculus.
//!
//! Curves map packet indices to time (or time to packet counts), bounding
//! functions bound the probability that a trace statistic exceeds a level,
//! and models pair the two. The simulator produces the traces those
//! statistics are measured on.

pub mod bounding;
pub mod curve;
pub mod models;
pub mod sim;
pub mod analysis;
pub mod report;
pub mod scenario;
