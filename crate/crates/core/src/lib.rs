//! Analytical and simulation engine for adaptive transmission-mode selection
//! in a buffer-aided bidirectional relay network.
//!
//! Two users exchange fixed-rate packets through a half-duplex decode-and-forward
//! relay that maintains one queue per direction. Each slot, the scheduler picks one
//! of seven transmission modes (two uplinks, a multiple-access uplink, two
//! downlinks, a network-coded broadcast, or silence) based on the instantaneous
//! link quality and the queue levels from the previous slot. Two selection rules
//! are provided: a delay-efficient rule that steers queue levels toward configured
//! thresholds, and a throughput-efficient rule that maximizes spectral efficiency
//! first.
//!
//! The crate computes per-flow throughput, outage and average queueing delay via
//! three mutually validating backends:
//!
//! * an exact discrete-time Markov chain over the joint queue state
//!   ([`markov`]), with closed-form transition matrices and closed-form
//!   stationary occupancies for the minimum-threshold configurations,
//! * a slot-level Monte Carlo simulator with per-packet delay accounting
//!   ([`sim`]), including two reference protocols without adaptive selection,
//! * high-SNR limit expressions ([`asymptotics`]).
//!
//! All randomness is drawn from explicitly seeded generators, so every result is
//! reproducible bit for bit.

pub mod asymptotics;
pub mod channel;
mod error;
pub mod markov;
pub mod modes;
pub mod policy;
pub mod sim;

pub use channel::{LinkConfig, RegionProbs, SnrPair, SnrRegion};
pub use error::Error;
pub use markov::{Metrics, StateSpace, StationaryDist, TransitionMatrix};
pub use modes::{Mode, ModeSet, QueueRegion, QueueState};
pub use policy::{PolicyKind, SelectionOutcome, Thresholds};
pub use sim::{BaselineKind, SimConfig, SimResult};
