//! Slot-level Monte Carlo simulator for the adaptive policies and two
//! reference schemes.
//!
//! The simulator replays the exact protocol: draw one SNR pair per slot,
//! classify it, select a mode from the previous slot's queue levels, apply
//! it, and account for every packet individually through FIFO buffers that
//! remember arrival slots. Its long-run averages must agree with the Markov
//! chain, which makes it the main end-to-end check on the analytical code,
//! and it also measures per-packet delay distributions the chain does not
//! expose.
//!
//! Randomness is reproducible: one seed feeds two independent ChaCha
//! streams, one for fading and one for tie-breaking, so enabling or
//! disabling tie randomization never shifts the fading sequence.

use std::collections::{BTreeMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::channel::{classify_region, sample_snr, LinkConfig, SnrRegion};
use crate::error::Error;
use crate::markov::Metrics;
use crate::modes::{Mode, QueueState};
use crate::policy::{select_mode, PolicyKind, Thresholds};

// ---- Configuration and result types ----

/// One simulation run: channel, buffers, policy and run length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub link: LinkConfig,
    pub l1_max: u32,
    pub l2_max: u32,
    pub thresholds: Thresholds,
    pub policy: PolicyKind,
    /// Total number of slots to simulate.
    pub n_slots: u64,
    /// Leading slots excluded from all reported statistics.
    pub warmup: u64,
    pub seed: u64,
}

/// Statistics of one run.
///
/// `metrics` mirrors the chain metrics, with delays measured per packet
/// rather than inferred from occupancy. The conservation counters cover the
/// whole run including warmup, so arrivals always equal departures plus the
/// final backlog.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub metrics: Metrics,
    /// Selected-mode counts over the counted slots.
    pub mode_counts: [u64; 7],
    /// End-of-slot state visit counts over the counted slots, on the full
    /// grid in `l2`-major order; empty for the reference schemes.
    pub state_visits: Vec<u64>,
    /// Per-packet delay histograms (delay in slots -> packets), one per flow.
    pub delay_hist1: BTreeMap<u64, u64>,
    pub delay_hist2: BTreeMap<u64, u64>,
    /// Whole-run packet arrivals into B1 and B2.
    pub arrivals: [u64; 2],
    /// Whole-run packet departures out of B1 and B2.
    pub departures: [u64; 2],
    /// Buffer levels when the run ended.
    pub final_levels: (u32, u32),
    /// Number of slots contributing to the reported statistics.
    pub slots_counted: u64,
}

/// Reference schemes simulated by [`run_baseline`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    /// Two-slot multiple-access / broadcast cycle without buffering: a pair
    /// of packets is delivered only if the uplink slot supports the sum rate
    /// and the following downlink slot reaches both users; every delivered
    /// packet waits exactly one slot.
    ConventionalMabc,
    /// Same two phases but separated in time with unbounded buffers: the
    /// first half of the run only collects uplink pairs, the second half
    /// only broadcasts them. Packets still buffered when the run ends are
    /// excluded from the delay statistics.
    BufferedMabc,
}

// ---- Helpers ----

struct Accounting {
    delivered: [u64; 2],
    delay_sum: [u64; 2],
    hist: [BTreeMap<u64, u64>; 2],
    arrivals: [u64; 2],
    departures: [u64; 2],
}

impl Accounting {
    fn new() -> Accounting {
        Accounting {
            delivered: [0; 2],
            delay_sum: [0; 2],
            hist: [BTreeMap::new(), BTreeMap::new()],
            arrivals: [0; 2],
            departures: [0; 2],
        }
    }

    fn arrive(&mut self, flow: usize) {
        self.arrivals[flow] += 1;
    }

    fn depart(&mut self, flow: usize, arrived: u64, slot: u64, counted: bool) {
        self.departures[flow] += 1;
        if counted {
            let delay = slot - arrived;
            self.delivered[flow] += 1;
            self.delay_sum[flow] += delay;
            *self.hist[flow].entry(delay).or_insert(0) += 1;
        }
    }

    fn mean_delay(&self, flow: usize) -> Option<f64> {
        (self.delivered[flow] > 0)
            .then(|| self.delay_sum[flow] as f64 / self.delivered[flow] as f64)
    }
}

fn sim_metrics(acc: &Accounting, q1: f64, q2: f64, slots: u64, r0: f64) -> Metrics {
    let rate12 = acc.delivered[0] as f64 / slots as f64;
    let rate21 = acc.delivered[1] as f64 / slots as f64;
    let (r12, r21) = (rate12 * r0, rate21 * r0);
    let f12 = 1.0 - 2.0 * rate12;
    let f21 = 1.0 - 2.0 * rate21;
    let t1 = acc.mean_delay(0);
    let t2 = acc.mean_delay(1);
    Metrics {
        r12,
        r21,
        r_sum: r12 + r21,
        f12,
        f21,
        f_sys: (f12 + f21) / 2.0,
        q1,
        q2,
        t1,
        t2,
        t_sys: t1.zip(t2).map(|(a, b)| (a + b) / 2.0),
    }
}

fn rng_pair(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut fading = ChaCha8Rng::seed_from_u64(seed);
    fading.set_stream(0);
    let mut ties = ChaCha8Rng::seed_from_u64(seed);
    ties.set_stream(1);
    (fading, ties)
}

// ---- Adaptive-policy simulation ----

/// Simulates the adaptive policy slot by slot.
pub fn run(cfg: &SimConfig) -> Result<SimResult, Error> {
    cfg.thresholds.validate_for(cfg.l1_max, cfg.l2_max)?;
    if cfg.n_slots == 0 || cfg.warmup >= cfg.n_slots {
        return Err(Error::InvalidParameter(format!(
            "need warmup < n_slots, got warmup {} of {} slots",
            cfg.warmup, cfg.n_slots
        )));
    }
    let (mut fading, mut ties) = rng_pair(cfg.seed);
    let mut b1: VecDeque<u64> = VecDeque::new();
    let mut b2: VecDeque<u64> = VecDeque::new();
    let mut acc = Accounting::new();
    let mut mode_counts = [0u64; 7];
    let mut state_visits = vec![0u64; ((cfg.l1_max + 1) * (cfg.l2_max + 1)) as usize];
    let mut level_sum = [0u64; 2];
    let width = (cfg.l1_max + 1) as usize;

    for slot in 0..cfg.n_slots {
        let snr = sample_snr(&cfg.link, &mut fading);
        let region = classify_region(&cfg.link, snr);
        let q = QueueState::new(b1.len() as u32, b2.len() as u32, cfg.l1_max, cfg.l2_max);
        let mode = select_mode(region, &q, cfg.thresholds, cfg.policy, &mut ties).mode;
        let counted = slot >= cfg.warmup;
        match mode {
            Mode::M1 => {
                b1.push_back(slot);
                acc.arrive(0);
            }
            Mode::M2 => {
                b2.push_back(slot);
                acc.arrive(1);
            }
            Mode::M3 => {
                b1.push_back(slot);
                acc.arrive(0);
                b2.push_back(slot);
                acc.arrive(1);
            }
            Mode::M4 => {
                let a = b2.pop_front().expect("admissible mode");
                acc.depart(1, a, slot, counted);
            }
            Mode::M5 => {
                let a = b1.pop_front().expect("admissible mode");
                acc.depart(0, a, slot, counted);
            }
            Mode::M6 => {
                let a = b1.pop_front().expect("admissible mode");
                acc.depart(0, a, slot, counted);
                let a = b2.pop_front().expect("admissible mode");
                acc.depart(1, a, slot, counted);
            }
            Mode::M7 => {}
        }
        if counted {
            mode_counts[mode.index()] += 1;
            state_visits[b2.len() * width + b1.len()] += 1;
            level_sum[0] += b1.len() as u64;
            level_sum[1] += b2.len() as u64;
        }
    }

    let slots = cfg.n_slots - cfg.warmup;
    let q1 = level_sum[0] as f64 / slots as f64;
    let q2 = level_sum[1] as f64 / slots as f64;
    let metrics = sim_metrics(&acc, q1, q2, slots, cfg.link.r0);
    Ok(SimResult {
        metrics,
        mode_counts,
        state_visits,
        delay_hist1: acc.hist[0].clone(),
        delay_hist2: acc.hist[1].clone(),
        arrivals: acc.arrivals,
        departures: acc.departures,
        final_levels: (b1.len() as u32, b2.len() as u32),
        slots_counted: slots,
    })
}

// ---- Reference schemes ----

/// Simulates one of the reference schemes over the same fading process.
///
/// Only the channel, run length and seed of `cfg` are used: the references
/// have no thresholds, no policy and either no buffers or unbounded ones,
/// and the whole run is counted.
pub fn run_baseline(cfg: &SimConfig, kind: BaselineKind) -> Result<SimResult, Error> {
    if cfg.n_slots == 0 || !cfg.n_slots.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "reference schemes need an even positive slot count, got {}",
            cfg.n_slots
        )));
    }
    let (mut fading, _) = rng_pair(cfg.seed);
    let mut acc = Accounting::new();
    let mut final_levels = (0u32, 0u32);
    match kind {
        BaselineKind::ConventionalMabc => {
            for pair in 0..cfg.n_slots / 2 {
                let up = classify_region(&cfg.link, sample_snr(&cfg.link, &mut fading));
                let down = classify_region(&cfg.link, sample_snr(&cfg.link, &mut fading));
                let up_ok = up == SnrRegion::R1;
                let down_ok = down == SnrRegion::R1 || down == SnrRegion::R2;
                if up_ok {
                    acc.arrive(0);
                    acc.arrive(1);
                    if down_ok {
                        let slot = 2 * pair;
                        acc.depart(0, slot, slot + 1, true);
                        acc.depart(1, slot, slot + 1, true);
                    }
                }
            }
            // Packets whose broadcast slot failed are dropped, not buffered.
            acc.arrivals = acc.departures;
        }
        BaselineKind::BufferedMabc => {
            let half = cfg.n_slots / 2;
            let mut b1: VecDeque<u64> = VecDeque::new();
            let mut b2: VecDeque<u64> = VecDeque::new();
            for slot in 0..half {
                let r = classify_region(&cfg.link, sample_snr(&cfg.link, &mut fading));
                if r == SnrRegion::R1 {
                    b1.push_back(slot);
                    acc.arrive(0);
                    b2.push_back(slot);
                    acc.arrive(1);
                }
            }
            for slot in half..cfg.n_slots {
                let r = classify_region(&cfg.link, sample_snr(&cfg.link, &mut fading));
                if (r == SnrRegion::R1 || r == SnrRegion::R2) && !b1.is_empty() {
                    let a = b1.pop_front().expect("checked non-empty");
                    acc.depart(0, a, slot, true);
                    let a = b2.pop_front().expect("buffers fill in lockstep");
                    acc.depart(1, a, slot, true);
                }
            }
            final_levels = (b1.len() as u32, b2.len() as u32);
        }
    }
    let metrics = sim_metrics(&acc, 0.0, 0.0, cfg.n_slots, cfg.link.r0);
    Ok(SimResult {
        metrics,
        mode_counts: [0; 7],
        state_visits: Vec::new(),
        delay_hist1: acc.hist[0].clone(),
        delay_hist2: acc.hist[1].clone(),
        arrivals: acc.arrivals,
        departures: acc.departures,
        final_levels,
        slots_counted: cfg.n_slots,
    })
}
