//! Reachability reduction and stationary-distribution solver.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::markov::{StateSpace, StationaryDist, TransitionMatrix};

const RESIDUAL_TOL: f64 = 1e-9;

// ---- Reduction ----

/// Restricts the chain to the states reachable from empty buffers.
///
/// Both policies start from `(0, 0)`; states the chain can never enter
/// (for example interior states under the minimum-threshold policies) would
/// otherwise make the stationary system singular in uncontrolled ways.
/// The surviving states keep their relative enumeration order.
pub fn reduce(m: &TransitionMatrix) -> TransitionMatrix {
    let n = m.space.len();
    let start = m
        .space
        .index_of(0, 0)
        .expect("state space lacks the empty state");
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    seen[start] = true;
    queue.push_back(start);
    while let Some(from) = queue.pop_front() {
        for (to, visited) in seen.iter_mut().enumerate() {
            if !*visited && m.prob(to, from) > 0.0 {
                *visited = true;
                queue.push_back(to);
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| seen[i]).collect();
    let states: Vec<(u32, u32)> = keep.iter().map(|&i| m.space.state(i)).collect();
    let space = StateSpace::from_states(m.space.l1_max, m.space.l2_max, states);
    let mut sub = DMatrix::zeros(keep.len(), keep.len());
    for (jj, &j) in keep.iter().enumerate() {
        for (ii, &i) in keep.iter().enumerate() {
            sub[(ii, jj)] = m.prob(i, j);
        }
    }
    TransitionMatrix { space, m: sub }
}

// ---- Stationary distribution ----

/// Solves `pi = M pi`, `sum(pi) = 1` for a column-stochastic matrix.
///
/// A direct LU solve of the balance equations with the last row replaced by
/// the normalization is attempted first; if its residual is poor (nearly
/// singular systems), a damped power iteration takes over. The damping by
/// one half keeps the iteration convergent on periodic chains without
/// changing the fixed point. Fails with [`Error::NonConvergent`] if neither
/// route reaches the residual tolerance.
pub fn stationary(m: &TransitionMatrix) -> Result<StationaryDist, Error> {
    let n = m.space.len();
    if n == 1 {
        return Ok(StationaryDist {
            space: m.space.clone(),
            pi: DVector::from_element(1, 1.0),
        });
    }
    let pi = direct_solve(&m.m)
        .filter(|pi| residual(&m.m, pi) < RESIDUAL_TOL)
        .or_else(|| power_iterate(&m.m));
    match pi {
        Some(pi) => {
            let r = residual(&m.m, &pi);
            if r < RESIDUAL_TOL {
                Ok(StationaryDist {
                    space: m.space.clone(),
                    pi,
                })
            } else {
                Err(Error::NonConvergent { residual: r })
            }
        }
        None => Err(Error::NonConvergent { residual: f64::NAN }),
    }
}

/// Infinity norm of `M pi - pi`.
fn residual(m: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    (m * pi - pi).abs().max()
}

fn direct_solve(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = m.nrows();
    let mut a = m - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let pi = a.lu().solve(&b)?;
    normalize(pi)
}

fn power_iterate(m: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = m.nrows();
    let mut pi = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..200_000 {
        // pi <- (M pi + pi) / 2
        let next = (m * &pi + &pi) * 0.5;
        let delta = (&next - &pi).abs().max();
        pi = next;
        if delta < RESIDUAL_TOL / 8.0 {
            break;
        }
    }
    normalize(pi)
}

/// Clamps negative rounding noise and rescales to a unit sum.
fn normalize(mut pi: DVector<f64>) -> Option<DVector<f64>> {
    if pi.iter().any(|&p| !p.is_finite() || p < -1e-9) {
        return None;
    }
    pi.apply(|p| *p = p.max(0.0));
    let s = pi.sum();
    if s <= 0.0 {
        return None;
    }
    Some(pi / s)
}
