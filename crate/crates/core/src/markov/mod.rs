//! Exact queue-state Markov chain and its performance metrics.
//!
//! The joint buffer level `(l1, l2)` forms a discrete-time Markov chain: the
//! SNR draws are independent across slots, so conditioning on the five SNR
//! regions and on the selection rule yields a transition matrix whose entries
//! are fixed linear combinations of the region probabilities. This module
//! builds that matrix (three ways), restricts it to the states reachable from
//! empty buffers, solves for the stationary distribution, and evaluates
//! throughput, outage and delay.
//!
//! Matrices are column-stochastic: `m[(to, from)]` is the probability of
//! moving from state `from` to state `to` in one slot. States are enumerated
//! with `l2` as the major index: `(0,0), (1,0), ..., (l1_max,0), (0,1), ...`.
//!
//! A queue level changes by at most one per slot and both queues never move
//! in opposite directions within a slot, so every entry with `|dl| >= 2` on
//! either queue, or with opposite-sign moves, is exactly zero.

mod build;
mod metrics;
mod solve;

pub use build::{build_generic, build_prop1, build_te_min};
pub use metrics::{closed_form_min_delay, lemma1_min_delays, metrics, prop3_occupancy, Metrics};
pub use solve::{reduce, stationary};

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::channel::RegionProbs;
use crate::error::Error;
use crate::policy::{PolicyKind, Thresholds};

// ---- State space ----

/// Ordered set of queue states underlying a transition matrix.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub l1_max: u32,
    pub l2_max: u32,
    states: Vec<(u32, u32)>,
    index: HashMap<(u32, u32), usize>,
}

impl StateSpace {
    /// Full grid of `(l1_max + 1) * (l2_max + 1)` states in `l2`-major order.
    pub fn full(l1_max: u32, l2_max: u32) -> StateSpace {
        assert!(l1_max >= 1 && l2_max >= 1);
        let mut states = Vec::with_capacity(((l1_max + 1) * (l2_max + 1)) as usize);
        for l2 in 0..=l2_max {
            for l1 in 0..=l1_max {
                states.push((l1, l2));
            }
        }
        Self::from_states(l1_max, l2_max, states)
    }

    /// Subset of the grid in the given order.
    pub fn from_states(l1_max: u32, l2_max: u32, states: Vec<(u32, u32)>) -> StateSpace {
        let index = states
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i))
            .collect::<HashMap<_, _>>();
        assert_eq!(index.len(), states.len(), "duplicate states");
        StateSpace {
            l1_max,
            l2_max,
            states,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Queue state at the given enumeration position.
    pub fn state(&self, i: usize) -> (u32, u32) {
        self.states[i]
    }

    /// Enumeration position of a queue state, if present.
    pub fn index_of(&self, l1: u32, l2: u32) -> Option<usize> {
        self.index.get(&(l1, l2)).copied()
    }

    /// States in enumeration order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.states.iter().copied()
    }
}

impl PartialEq for StateSpace {
    fn eq(&self, other: &Self) -> bool {
        self.l1_max == other.l1_max && self.l2_max == other.l2_max && self.states == other.states
    }
}

// ---- Transition matrix ----

/// Column-stochastic transition matrix over a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub space: StateSpace,
    /// `m[(to, from)]`, column-stochastic.
    pub m: DMatrix<f64>,
}

impl TransitionMatrix {
    pub(crate) fn zeros(space: StateSpace) -> TransitionMatrix {
        let n = space.len();
        TransitionMatrix {
            space,
            m: DMatrix::zeros(n, n),
        }
    }

    /// Transition probability from `from` to `to` (enumeration indices).
    pub fn prob(&self, to: usize, from: usize) -> f64 {
        self.m[(to, from)]
    }

    /// Largest deviation of any column sum from one.
    pub fn max_column_sum_error(&self) -> f64 {
        (0..self.space.len())
            .map(|j| (self.m.column(j).sum() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry difference against another matrix on the same
    /// state space.
    pub fn max_abs_diff(&self, other: &TransitionMatrix) -> f64 {
        assert_eq!(self.space, other.space, "state spaces differ");
        (&self.m - &other.m).abs().max()
    }
}

// ---- Stationary distribution ----

/// Stationary probabilities aligned with a [`StateSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDist {
    pub space: StateSpace,
    pub pi: DVector<f64>,
}

impl StationaryDist {
    /// Stationary probability of a queue state; zero for states outside the
    /// space.
    pub fn prob(&self, l1: u32, l2: u32) -> f64 {
        self.space.index_of(l1, l2).map_or(0.0, |i| self.pi[i])
    }
}

// ---- Pipeline convenience ----

/// Builds the policy-driven chain, reduces it to the states reachable from
/// empty buffers, solves it and evaluates all metrics.
pub fn evaluate(
    probs: &RegionProbs,
    l1_max: u32,
    l2_max: u32,
    thresholds: Thresholds,
    kind: PolicyKind,
    r0: f64,
) -> Result<Metrics, Error> {
    thresholds.validate_for(l1_max, l2_max)?;
    let full = build_generic(probs, l1_max, l2_max, thresholds, kind);
    let chain = reduce(&full);
    let pi = stationary(&chain)?;
    Ok(metrics(&chain, &pi, r0))
}
