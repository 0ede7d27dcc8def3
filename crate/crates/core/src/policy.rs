//! Queue-aware mode selection.
//!
//! Selection happens in two argmax stages over the per-slot candidate set.
//! The delay-efficient rule ranks modes by a queue-steering utility first and
//! breaks ties by the number of packets a mode moves per slot; the
//! throughput-efficient rule applies the same two criteria in the opposite
//! order. Any tie surviving both stages is broken uniformly at random.
//!
//! The utilities compare the previous-slot queue levels against configured
//! targets `(l1_thr, l2_thr)`:
//!
//! ```text
//! u1 = l1_thr - l1          u4 = max(l2 - l2_thr, 0)
//! u2 = l2_thr - l2          u5 = max(l1 - l1_thr, 0)
//! u3 = min(u1, u2)          u6 = max(u4, u5)         u7 = 0
//! ```
//!
//! Receive modes thus score high while a buffer sits below its target, and
//! transmit modes score high when one sits above, so the queue levels are
//! steered toward the targets. With both targets at zero the rule keeps the
//! buffers nearly empty, which realizes the minimum average delay.

use rand::Rng;

use crate::channel::SnrRegion;
use crate::error::Error;
use crate::modes::{feasible_set, Mode, ModeSet, QueueState};

// ---- Public types ----

/// Queue-level targets for the utility functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Thresholds {
    pub l1_thr: u32,
    pub l2_thr: u32,
}

impl Thresholds {
    pub fn new(l1_thr: u32, l2_thr: u32) -> Thresholds {
        Thresholds { l1_thr, l2_thr }
    }

    /// Checks the targets against buffer capacities.
    pub fn validate_for(&self, l1_max: u32, l2_max: u32) -> Result<(), Error> {
        if self.l1_thr > l1_max || self.l2_thr > l2_max {
            return Err(Error::InvalidParameter(format!(
                "thresholds ({}, {}) exceed buffer capacities ({}, {})",
                self.l1_thr, self.l2_thr, l1_max, l2_max
            )));
        }
        Ok(())
    }
}

/// Order of the two argmax stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Utility first, packets-per-slot second.
    DelayEfficient,
    /// Packets-per-slot first, utility second.
    ThroughputEfficient,
}

/// Result of one selection: the chosen mode, the tie set the uniform draw
/// ran over, and the utility vector that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectionOutcome {
    pub mode: Mode,
    pub tie_set: ModeSet,
    pub utilities: [i64; 7],
}

// ---- Operations ----

/// Utility vector for the seven modes, indexed by [`Mode::index`].
pub fn utilities(q: &QueueState, t: Thresholds) -> [i64; 7] {
    let u1 = t.l1_thr as i64 - q.l1 as i64;
    let u2 = t.l2_thr as i64 - q.l2 as i64;
    let u4 = (q.l2 as i64 - t.l2_thr as i64).max(0);
    let u5 = (q.l1 as i64 - t.l1_thr as i64).max(0);
    [u1, u2, u1.min(u2), u4, u5, u4.max(u5), 0]
}

/// Set of modes surviving both argmax stages. Uniform over this set is the
/// per-slot selection law.
pub(crate) fn tie_set(lambda: &[i64; 7], feasible: ModeSet, kind: PolicyKind) -> ModeSet {
    debug_assert!(!feasible.is_empty());
    let by_utility = |set: ModeSet| {
        let best = set.iter().map(|m| lambda[m.index()]).max().unwrap();
        let mut out = ModeSet::EMPTY;
        for m in set.iter().filter(|m| lambda[m.index()] == best) {
            out.insert(m);
        }
        out
    };
    let by_rate = |set: ModeSet| {
        let best = set.iter().map(Mode::tau).max().unwrap();
        let mut out = ModeSet::EMPTY;
        for m in set.iter().filter(|m| m.tau() == best) {
            out.insert(m);
        }
        out
    };
    match kind {
        PolicyKind::DelayEfficient => by_rate(by_utility(feasible)),
        PolicyKind::ThroughputEfficient => by_utility(by_rate(feasible)),
    }
}

/// Selects the mode for one slot. `q` must hold the queue levels of the
/// previous slot. The generator is only consumed when the tie set has more
/// than one member, and should be a stream separate from the fading draws.
pub fn select_mode<R: Rng + ?Sized>(
    r: SnrRegion,
    q: &QueueState,
    t: Thresholds,
    kind: PolicyKind,
    rng: &mut R,
) -> SelectionOutcome {
    let lambda = utilities(q, t);
    let ties = tie_set(&lambda, feasible_set(r, q), kind);
    let mode = if ties.len() == 1 {
        ties.iter().next().unwrap()
    } else {
        let pick = rng.gen_range(0..ties.len());
        ties.iter().nth(pick as usize).unwrap()
    };
    SelectionOutcome {
        mode,
        tie_set: ties,
        utilities: lambda,
    }
}

/// Per-mode selection probabilities for one slot: uniform over the tie set,
/// zero elsewhere. Deterministic counterpart of [`select_mode`].
pub fn selection_distribution(
    r: SnrRegion,
    q: &QueueState,
    t: Thresholds,
    kind: PolicyKind,
) -> [f64; 7] {
    let lambda = utilities(q, t);
    let ties = tie_set(&lambda, feasible_set(r, q), kind);
    let w = 1.0 / ties.len() as f64;
    let mut out = [0.0; 7];
    for m in ties.iter() {
        out[m.index()] = w;
    }
    out
}
