//! Transition-matrix builders.
//!
//! `build_generic` drives the full selection machinery state by state and
//! works for both policies and any thresholds. `build_prop1` and
//! `build_te_min` are independent closed-form constructions used to
//! cross-check it: the first resolves the delay-efficient selection per SNR
//! region by direct utility comparison, the second writes down the
//! minimum-threshold throughput-efficient columns per buffer-fill region.

use crate::channel::{RegionProbs, SnrRegion};
use crate::markov::{StateSpace, TransitionMatrix};
use crate::modes::{Mode, QueueState};
use crate::policy::{selection_distribution, PolicyKind, Thresholds};

/// Accumulates `weight` on the column entry reached by applying `mode` in
/// state `q`.
fn deposit(m: &mut TransitionMatrix, from: usize, q: &QueueState, mode: Mode, weight: f64) {
    if weight == 0.0 {
        return;
    }
    let next = q.apply(mode);
    let to = m
        .space
        .index_of(next.l1, next.l2)
        .expect("successor state outside the grid");
    m.m[(to, from)] += weight;
}

// ---- Policy-driven builder ----

/// Transition matrix obtained by evaluating the selection rule in every
/// queue state for every SNR region.
pub fn build_generic(
    probs: &RegionProbs,
    l1_max: u32,
    l2_max: u32,
    thresholds: Thresholds,
    kind: PolicyKind,
) -> TransitionMatrix {
    let space = StateSpace::full(l1_max, l2_max);
    let mut m = TransitionMatrix::zeros(space);
    for from in 0..m.space.len() {
        let (l1, l2) = m.space.state(from);
        let q = QueueState::new(l1, l2, l1_max, l2_max);
        for region in SnrRegion::ALL {
            let p = probs.p(region);
            if p == 0.0 {
                continue;
            }
            let dist = selection_distribution(region, &q, thresholds, kind);
            for mode in Mode::ALL {
                deposit(&mut m, from, &q, mode, p * dist[mode.index()]);
            }
        }
    }
    m
}

// ---- Closed-form delay-efficient builder ----

/// Deposits probability `p` split uniformly over `modes`.
fn deposit_uniform(m: &mut TransitionMatrix, from: usize, q: &QueueState, modes: &[Mode], p: f64) {
    let w = p / modes.len() as f64;
    for &mode in modes {
        deposit(m, from, q, mode, w);
    }
}

/// Winners of the delay-efficient selection among the one-packet modes and
/// the idle mode, given each mode's utility or `None` when inadmissible.
/// Returns the argmax set restricted to one-packet modes; empty means idle
/// wins.
fn one_packet_winners(candidates: [(Mode, Option<i64>); 4]) -> Vec<Mode> {
    let best = candidates
        .iter()
        .filter_map(|&(_, u)| u)
        .chain(std::iter::once(0))
        .max()
        .unwrap();
    candidates
        .iter()
        .filter_map(|&(mode, u)| (u == Some(best)).then_some(mode))
        .collect()
}

/// Closed-form delay-efficient transition matrix.
///
/// Each column is written down directly: within every SNR region the winning
/// mode follows from comparing the admissible utilities, with the two-packet
/// modes taking precedence inside a top-utility tie and remaining ties split
/// uniformly. No sampling machinery is involved, so this builder serves as an
/// independent check on [`build_generic`] with the delay-efficient policy.
pub fn build_prop1(
    probs: &RegionProbs,
    l1_max: u32,
    l2_max: u32,
    thresholds: Thresholds,
) -> TransitionMatrix {
    let space = StateSpace::full(l1_max, l2_max);
    let mut m = TransitionMatrix::zeros(space);
    let t1 = thresholds.l1_thr as i64;
    let t2 = thresholds.l2_thr as i64;
    for from in 0..m.space.len() {
        let (l1, l2) = m.space.state(from);
        let q = QueueState::new(l1, l2, l1_max, l2_max);
        let (i1, i2) = (l1 as i64, l2 as i64);
        let u1 = (l1 < l1_max).then_some(t1 - i1);
        let u2 = (l2 < l2_max).then_some(t2 - i2);
        let u3 = (l1 < l1_max && l2 < l2_max).then_some((t1 - i1).min(t2 - i2));
        let u4 = (l2 > 0).then_some((i2 - t2).max(0));
        let u5 = (l1 > 0).then_some((i1 - t1).max(0));
        let u6 = (l1 > 0 && l2 > 0).then_some((i2 - t2).max(0).max((i1 - t1).max(0)));

        // Both links below the single-link threshold: only silence is left.
        deposit(&mut m, from, &q, Mode::M7, probs.p(SnrRegion::R5));

        // Only the first link decodes: user 1 may transmit or the relay may
        // serve user 1 from B2.
        let winners = one_packet_winners([
            (Mode::M1, u1),
            (Mode::M4, u4),
            (Mode::M2, None),
            (Mode::M5, None),
        ]);
        let p3 = probs.p(SnrRegion::R3);
        if winners.is_empty() {
            deposit(&mut m, from, &q, Mode::M7, p3);
        } else {
            deposit_uniform(&mut m, from, &q, &winners, p3);
        }

        // Mirror case for the second link.
        let winners = one_packet_winners([
            (Mode::M2, u2),
            (Mode::M5, u5),
            (Mode::M1, None),
            (Mode::M4, None),
        ]);
        let p4 = probs.p(SnrRegion::R4);
        if winners.is_empty() {
            deposit(&mut m, from, &q, Mode::M7, p4);
        } else {
            deposit_uniform(&mut m, from, &q, &winners, p4);
        }

        // Both links decode single-user rates but not the sum rate: all modes
        // except multiple access compete, and broadcast wins any top-utility
        // tie it joins because it moves two packets.
        let p2 = probs.p(SnrRegion::R2);
        let best = [u1, u2, u4, u5, u6]
            .iter()
            .filter_map(|&u| u)
            .chain(std::iter::once(0))
            .max()
            .unwrap();
        if u6 == Some(best) {
            deposit(&mut m, from, &q, Mode::M6, p2);
        } else {
            let winners = one_packet_winners([
                (Mode::M1, u1),
                (Mode::M2, u2),
                (Mode::M4, u4),
                (Mode::M5, u5),
            ]);
            if winners.is_empty() {
                deposit(&mut m, from, &q, Mode::M7, p2);
            } else {
                deposit_uniform(&mut m, from, &q, &winners, p2);
            }
        }

        // Both links support the sum rate: multiple access joins the
        // competition with the same two-packet precedence as broadcast.
        let p1 = probs.p(SnrRegion::R1);
        let best = [u1, u2, u3, u4, u5, u6]
            .iter()
            .filter_map(|&u| u)
            .chain(std::iter::once(0))
            .max()
            .unwrap();
        let two: Vec<Mode> = [(Mode::M3, u3), (Mode::M6, u6)]
            .iter()
            .filter_map(|&(mode, u)| (u == Some(best)).then_some(mode))
            .collect();
        if !two.is_empty() {
            deposit_uniform(&mut m, from, &q, &two, p1);
        } else {
            let winners = one_packet_winners([
                (Mode::M1, u1),
                (Mode::M2, u2),
                (Mode::M4, u4),
                (Mode::M5, u5),
            ]);
            if winners.is_empty() {
                deposit(&mut m, from, &q, Mode::M7, p1);
            } else {
                deposit_uniform(&mut m, from, &q, &winners, p1);
            }
        }
    }
    m
}

// ---- Closed-form minimum-threshold throughput-efficient builder ----

/// Closed-form transition matrix for the throughput-efficient policy with
/// both thresholds at zero.
///
/// With zero thresholds every non-empty buffer has a reception utility below
/// zero's competition only through the rate stage, so the winning mode
/// depends only on which buffers are empty, partial or full. Each column is
/// one of six fixed patterns.
pub fn build_te_min(probs: &RegionProbs, l1_max: u32, l2_max: u32) -> TransitionMatrix {
    let space = StateSpace::full(l1_max, l2_max);
    let mut m = TransitionMatrix::zeros(space);
    let p1 = probs.p(SnrRegion::R1);
    let p2 = probs.p(SnrRegion::R2);
    let p3 = probs.p(SnrRegion::R3);
    let p4 = probs.p(SnrRegion::R4);
    let p5 = probs.p(SnrRegion::R5);
    for from in 0..m.space.len() {
        let (l1, l2) = m.space.state(from);
        let q = QueueState::new(l1, l2, l1_max, l2_max);
        let entries: &[(Mode, f64)] = if l1 > 0 && l2 > 0 {
            // Broadcast whenever the relay holds both directions.
            &[
                (Mode::M6, p1 + p2),
                (Mode::M4, p3),
                (Mode::M5, p4),
                (Mode::M7, p5),
            ]
        } else if l1 == 0 && l2 == 0 {
            &[
                (Mode::M3, p1),
                (Mode::M1, p2 / 2.0),
                (Mode::M2, p2 / 2.0),
                (Mode::M1, p3),
                (Mode::M2, p4),
                (Mode::M7, p5),
            ]
        } else if l2 == 0 && l1 < l1_max {
            &[
                (Mode::M3, p1),
                (Mode::M5, p2),
                (Mode::M1, p3),
                (Mode::M5, p4),
                (Mode::M7, p5),
            ]
        } else if l2 == 0 {
            // B1 full, B2 empty: serving B1 is the only useful move.
            &[(Mode::M5, p1 + p2 + p4), (Mode::M7, p3 + p5)]
        } else if l1 == 0 && l2 < l2_max {
            &[
                (Mode::M3, p1),
                (Mode::M4, p2),
                (Mode::M4, p3),
                (Mode::M2, p4),
                (Mode::M7, p5),
            ]
        } else {
            // B1 empty, B2 full.
            &[(Mode::M4, p1 + p2 + p3), (Mode::M7, p4 + p5)]
        };
        for &(mode, w) in entries {
            deposit(&mut m, from, &q, mode, w);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkConfig;
    use crate::markov::solve::reduce;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_probs(rng: &mut impl Rng) -> RegionProbs {
        let raw: [f64; 5] = std::array::from_fn(|_| rng.gen_range(0.01..1.0));
        let s: f64 = raw.iter().sum();
        RegionProbs::new(raw.map(|p| p / s)).unwrap()
    }

    fn exact_probs(gamma_db: f64) -> RegionProbs {
        let cfg = LinkConfig::from_db(1.0, 1.0, gamma_db, 1.0).unwrap();
        crate::channel::region_probs_exact(&cfg)
    }

    #[test]
    fn columns_sum_to_one() {
        let probs = exact_probs(10.0);
        for m in [
            build_generic(
                &probs,
                4,
                3,
                Thresholds::new(2, 1),
                PolicyKind::DelayEfficient,
            ),
            build_prop1(&probs, 4, 3, Thresholds::new(2, 1)),
            build_te_min(&probs, 4, 3),
        ] {
            assert!(m.max_column_sum_error() < 1e-12);
        }
    }

    #[test]
    fn moves_stay_within_one_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let probs = random_probs(&mut rng);
        let m = build_generic(
            &probs,
            5,
            5,
            Thresholds::new(3, 2),
            PolicyKind::ThroughputEfficient,
        );
        for from in 0..m.space.len() {
            let (f1, f2) = m.space.state(from);
            for to in 0..m.space.len() {
                if m.prob(to, from) == 0.0 {
                    continue;
                }
                let (t1, t2) = m.space.state(to);
                let d1 = t1 as i64 - f1 as i64;
                let d2 = t2 as i64 - f2 as i64;
                assert!(d1.abs() <= 1 && d2.abs() <= 1, "jump {d1},{d2}");
                assert!(d1 * d2 >= 0, "opposite moves {d1},{d2}");
            }
        }
    }

    #[test]
    fn closed_form_delay_efficient_matches_policy_driven() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let probs = random_probs(&mut rng);
            for (c1, c2) in [(3, 3), (4, 2)] {
                for t1 in 0..=2u32.min(c1) {
                    for t2 in 0..=2u32.min(c2) {
                        let t = Thresholds::new(t1, t2);
                        let a = build_prop1(&probs, c1, c2, t);
                        let b = build_generic(&probs, c1, c2, t, PolicyKind::DelayEfficient);
                        assert!(
                            a.max_abs_diff(&b) < 1e-12,
                            "mismatch at caps ({c1},{c2}) thresholds ({t1},{t2})"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn closed_form_throughput_efficient_matches_policy_driven() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..30 {
            let probs = random_probs(&mut rng);
            for (c1, c2) in [(3, 3), (5, 4), (1, 1)] {
                let a = build_te_min(&probs, c1, c2);
                let b = build_generic(
                    &probs,
                    c1,
                    c2,
                    Thresholds::new(0, 0),
                    PolicyKind::ThroughputEfficient,
                );
                assert!(a.max_abs_diff(&b) < 1e-12, "mismatch at caps ({c1},{c2})");
            }
        }
    }

    #[test]
    fn frozen_minimum_threshold_delay_efficient_columns() {
        // With both thresholds at zero the delay-efficient chain lives on the
        // four states with levels at most one; these columns are exact in the
        // region probabilities.
        let probs = exact_probs(10.0);
        let p: [f64; 5] = std::array::from_fn(|i| probs.as_array()[i]);
        let m = build_prop1(&probs, 3, 3, Thresholds::new(0, 0));
        let s = |l1, l2| m.space.index_of(l1, l2).unwrap();

        let from = s(0, 0);
        assert!((m.prob(s(0, 0), from) - p[4]).abs() < 1e-15);
        assert!((m.prob(s(1, 0), from) - (p[1] / 2.0 + p[2])).abs() < 1e-15);
        assert!((m.prob(s(0, 1), from) - (p[1] / 2.0 + p[3])).abs() < 1e-15);
        assert!((m.prob(s(1, 1), from) - p[0]).abs() < 1e-15);

        let from = s(1, 0);
        assert!((m.prob(s(0, 0), from) - (p[0] + p[1] + p[3])).abs() < 1e-15);
        assert!((m.prob(s(1, 0), from) - (p[2] + p[4])).abs() < 1e-15);

        let from = s(0, 1);
        assert!((m.prob(s(0, 0), from) - (p[0] + p[1] + p[2])).abs() < 1e-15);
        assert!((m.prob(s(0, 1), from) - (p[3] + p[4])).abs() < 1e-15);

        let from = s(1, 1);
        assert!((m.prob(s(0, 0), from) - (p[0] + p[1])).abs() < 1e-15);
        assert!((m.prob(s(1, 0), from) - p[2]).abs() < 1e-15);
        assert!((m.prob(s(0, 1), from) - p[3]).abs() < 1e-15);
        assert!((m.prob(s(1, 1), from) - p[4]).abs() < 1e-15);
    }

    #[test]
    fn minimum_threshold_delay_efficient_reaches_four_states() {
        let probs = exact_probs(5.0);
        let m = build_prop1(&probs, 6, 4, Thresholds::new(0, 0));
        let r = reduce(&m);
        let states: Vec<_> = r.space.iter().collect();
        assert_eq!(states, vec![(0, 0), (1, 0), (0, 1), (1, 1)]);
    }

    #[test]
    fn minimum_threshold_throughput_efficient_reaches_edge_states() {
        // Buffers never both exceed level one: the reachable set is the two
        // axes plus the level-one rows adjacent to them.
        let probs = exact_probs(5.0);
        let (c1, c2) = (5, 4);
        let m = build_te_min(&probs, c1, c2);
        let r = reduce(&m);
        assert_eq!(r.space.len(), (2 * (c1 + c2)) as usize);
        for (l1, l2) in r.space.iter() {
            assert!(l1 <= 1 || l2 <= 1, "interior state ({l1},{l2}) reached");
        }
    }

    #[test]
    fn high_threshold_chain_fills_before_serving() {
        // With thresholds at the caps the delay-efficient policy keeps
        // receiving until a buffer is full, so states below both thresholds
        // never see a relay transmission.
        let probs = exact_probs(10.0);
        let m = build_generic(
            &probs,
            3,
            3,
            Thresholds::new(3, 3),
            PolicyKind::DelayEfficient,
        );
        let from = m.space.index_of(1, 1).unwrap();
        for to in 0..m.space.len() {
            let (t1, t2) = m.space.state(to);
            if m.prob(to, from) > 0.0 {
                assert!(t1 >= 1 && t2 >= 1, "drained to ({t1},{t2})");
            }
        }
    }
}
