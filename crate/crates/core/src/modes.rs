//! Transmission modes, queue regions and per-slot candidate sets.
//!
//! The relay keeps two FIFO buffers: B1 holds packets received from user 1
//! (bound for user 2), B2 holds packets received from user 2 (bound for
//! user 1). Exactly one of seven modes runs per slot:
//!
//! | mode | meaning                      | queue effect | packets/slot |
//! |------|------------------------------|--------------|--------------|
//! | M1   | user 1 -> relay              | B1 +1        | 1            |
//! | M2   | user 2 -> relay              | B2 +1        | 1            |
//! | M3   | both users -> relay          | B1 +1, B2 +1 | 2            |
//! | M4   | relay -> user 1 (serves B2)  | B2 -1        | 1            |
//! | M5   | relay -> user 2 (serves B1)  | B1 -1        | 1            |
//! | M6   | relay -> both users          | B1 -1, B2 -1 | 2            |
//! | M7   | all nodes silent             | none         | 0            |
//!
//! A mode is a candidate in a slot only if the SNR region makes it decodable
//! and the queue levels leave room for its effect. Both constraints are
//! captured as fixed mode sets indexed by the SNR region (`R1..R5`) and by
//! the queue region (`L1..L9`, the empty/partial/full status of the two
//! buffers); the per-slot candidate set is their intersection. The silent
//! mode is a member of every set, so the intersection is never empty.

use crate::channel::SnrRegion;

// ---- Modes ----

/// One of the seven transmission modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// User 1 transmits, relay stores into B1.
    M1,
    /// User 2 transmits, relay stores into B2.
    M2,
    /// Multiple access: both users transmit, relay stores into both buffers.
    M3,
    /// Relay transmits the head of B2 to user 1.
    M4,
    /// Relay transmits the head of B1 to user 2.
    M5,
    /// Broadcast: relay serves both buffer heads at once.
    M6,
    /// Silent slot.
    M7,
}

impl Mode {
    /// All modes in index order.
    pub const ALL: [Mode; 7] = [
        Mode::M1,
        Mode::M2,
        Mode::M3,
        Mode::M4,
        Mode::M5,
        Mode::M6,
        Mode::M7,
    ];

    /// Zero-based index, `M1 -> 0` through `M7 -> 6`.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Mode with the given zero-based index.
    pub fn from_index(i: usize) -> Mode {
        Mode::ALL[i]
    }

    /// Queue-level change `(dB1, dB2)` caused by the mode.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Mode::M1 => (1, 0),
            Mode::M2 => (0, 1),
            Mode::M3 => (1, 1),
            Mode::M4 => (0, -1),
            Mode::M5 => (-1, 0),
            Mode::M6 => (-1, -1),
            Mode::M7 => (0, 0),
        }
    }

    /// Packets moved per slot: 2 for the two-user modes, 0 when silent.
    pub fn tau(self) -> u32 {
        match self {
            Mode::M3 | Mode::M6 => 2,
            Mode::M7 => 0,
            _ => 1,
        }
    }
}

/// Small set of modes backed by a bitmask, cheap to intersect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeSet(u8);

impl ModeSet {
    pub const EMPTY: ModeSet = ModeSet(0);
    pub const ALL: ModeSet = ModeSet(0x7f);

    /// Builds a set from a list of modes.
    pub const fn of(modes: &[Mode]) -> ModeSet {
        let mut bits = 0u8;
        let mut i = 0;
        while i < modes.len() {
            bits |= 1 << (modes[i] as u8);
            i += 1;
        }
        ModeSet(bits)
    }

    pub fn contains(self, m: Mode) -> bool {
        self.0 & (1 << m.index()) != 0
    }

    pub fn insert(&mut self, m: Mode) {
        self.0 |= 1 << m.index();
    }

    pub fn intersection(self, other: ModeSet) -> ModeSet {
        ModeSet(self.0 & other.0)
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// Iterates members in mode-index order.
    pub fn iter(self) -> impl Iterator<Item = Mode> {
        Mode::ALL.into_iter().filter(move |m| self.contains(*m))
    }
}

// ---- Queue state ----

/// Joint buffer levels together with the buffer capacities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QueueState {
    pub l1: u32,
    pub l2: u32,
    pub l1_max: u32,
    pub l2_max: u32,
}

impl QueueState {
    /// Builds a state; panics if a level exceeds its capacity or a capacity
    /// is zero.
    pub fn new(l1: u32, l2: u32, l1_max: u32, l2_max: u32) -> QueueState {
        assert!(l1_max >= 1 && l2_max >= 1, "buffer capacities must be >= 1");
        assert!(l1 <= l1_max && l2 <= l2_max, "queue level exceeds capacity");
        QueueState {
            l1,
            l2,
            l1_max,
            l2_max,
        }
    }

    /// True when the mode's queue effect stays within `[0, max]` on both
    /// buffers.
    pub fn admits(&self, m: Mode) -> bool {
        let (d1, d2) = m.delta();
        let n1 = self.l1 as i64 + d1 as i64;
        let n2 = self.l2 as i64 + d2 as i64;
        (0..=self.l1_max as i64).contains(&n1) && (0..=self.l2_max as i64).contains(&n2)
    }

    /// State after running the mode for one slot. Panics (debug) on an
    /// inadmissible mode.
    pub fn apply(&self, m: Mode) -> QueueState {
        debug_assert!(self.admits(m), "mode {m:?} inadmissible at {self:?}");
        let (d1, d2) = m.delta();
        QueueState {
            l1: (self.l1 as i64 + d1 as i64) as u32,
            l2: (self.l2 as i64 + d2 as i64) as u32,
            ..*self
        }
    }
}

/// Empty/partial/full status of the two buffers. "Partial" means strictly
/// between empty and full; with capacity 1 a buffer is always empty or full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueueRegion {
    /// Both buffers partially filled.
    L1,
    /// Both buffers empty.
    L2,
    /// B1 partial, B2 empty.
    L3,
    /// B1 full, B2 empty.
    L4,
    /// B1 full, B2 partial.
    L5,
    /// Both buffers full.
    L6,
    /// B1 partial, B2 full.
    L7,
    /// B1 empty, B2 full.
    L8,
    /// B1 empty, B2 partial.
    L9,
}

/// Buffer-status classification of a queue state.
pub fn classify_queue_region(q: &QueueState) -> QueueRegion {
    #[derive(PartialEq)]
    enum Fill {
        Empty,
        Partial,
        Full,
    }
    let status = |l: u32, max: u32| {
        if l == 0 {
            Fill::Empty
        } else if l == max {
            Fill::Full
        } else {
            Fill::Partial
        }
    };
    match (status(q.l1, q.l1_max), status(q.l2, q.l2_max)) {
        (Fill::Partial, Fill::Partial) => QueueRegion::L1,
        (Fill::Empty, Fill::Empty) => QueueRegion::L2,
        (Fill::Partial, Fill::Empty) => QueueRegion::L3,
        (Fill::Full, Fill::Empty) => QueueRegion::L4,
        (Fill::Full, Fill::Partial) => QueueRegion::L5,
        (Fill::Full, Fill::Full) => QueueRegion::L6,
        (Fill::Partial, Fill::Full) => QueueRegion::L7,
        (Fill::Empty, Fill::Full) => QueueRegion::L8,
        (Fill::Empty, Fill::Partial) => QueueRegion::L9,
    }
}

// ---- Candidate sets ----

use Mode::*;

const K_R1: ModeSet = ModeSet::ALL;
const K_R2: ModeSet = ModeSet::of(&[M1, M2, M4, M5, M6, M7]);
const K_R3: ModeSet = ModeSet::of(&[M1, M4, M7]);
const K_R4: ModeSet = ModeSet::of(&[M2, M5, M7]);
const K_R5: ModeSet = ModeSet::of(&[M7]);

const K_L1: ModeSet = ModeSet::ALL;
const K_L2: ModeSet = ModeSet::of(&[M1, M2, M3, M7]);
const K_L3: ModeSet = ModeSet::of(&[M1, M2, M3, M5, M7]);
const K_L4: ModeSet = ModeSet::of(&[M2, M5, M7]);
const K_L5: ModeSet = ModeSet::of(&[M2, M4, M5, M6, M7]);
const K_L6: ModeSet = ModeSet::of(&[M4, M5, M6, M7]);
const K_L7: ModeSet = ModeSet::of(&[M1, M4, M5, M6, M7]);
const K_L8: ModeSet = ModeSet::of(&[M1, M4, M7]);
const K_L9: ModeSet = ModeSet::of(&[M1, M2, M3, M4, M7]);

/// Modes decodable in the given SNR region.
pub fn candidate_modes_snr(r: SnrRegion) -> ModeSet {
    match r {
        SnrRegion::R1 => K_R1,
        SnrRegion::R2 => K_R2,
        SnrRegion::R3 => K_R3,
        SnrRegion::R4 => K_R4,
        SnrRegion::R5 => K_R5,
    }
}

/// Modes whose queue effect is legal in the given queue region.
pub fn candidate_modes_queue(l: QueueRegion) -> ModeSet {
    match l {
        QueueRegion::L1 => K_L1,
        QueueRegion::L2 => K_L2,
        QueueRegion::L3 => K_L3,
        QueueRegion::L4 => K_L4,
        QueueRegion::L5 => K_L5,
        QueueRegion::L6 => K_L6,
        QueueRegion::L7 => K_L7,
        QueueRegion::L8 => K_L8,
        QueueRegion::L9 => K_L9,
    }
}

/// Per-slot candidate set: decodable and queue-legal modes. Always contains
/// the silent mode.
pub fn feasible_set(r: SnrRegion, q: &QueueState) -> ModeSet {
    candidate_modes_snr(r).intersection(candidate_modes_queue(classify_queue_region(q)))
}
