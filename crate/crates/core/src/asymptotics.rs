//! Leading-order behaviour at high transmit SNR.
//!
//! As `gamma` grows, the sum-rate region absorbs all probability and every
//! metric approaches a simple law: sum throughput saturates at `r0`, the
//! outage fractions decay like `coeff / gamma`, and delays approach finite
//! limits. This module provides those coefficients and limits for the two
//! minimum-threshold operating points, plus the corresponding coefficient of
//! delay-unconstrained operation, whose ratio to the constrained one is the
//! SNR price of the delay constraint.

use crate::channel::{LinkConfig, RegionProbs};
use crate::error::Error;

fn check_positive(pairs: &[(&str, f64)]) -> Result<(), Error> {
    for &(name, v) in pairs {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    Ok(())
}

fn thr(r0: f64) -> f64 {
    f64::exp2(r0) - 1.0
}

// ---- Leading-order region probabilities ----

/// First-order region probabilities in `1 / gamma`.
///
/// The entries do not sum to one exactly (the best region carries the whole
/// first-order correction while the two-link failures are second order), so
/// the result is meant for comparisons against the exact values, not for
/// building chains. At low SNR the leading term for the best region can go
/// negative.
pub fn region_probs_asymptotic(c: &LinkConfig) -> RegionProbs {
    let t = c.gamma_thr;
    let s = c.gamma_thr_sum;
    let (m1, m2) = (c.mean_snr1(), c.mean_snr2());
    RegionProbs::from_raw([
        1.0 - (m1 + m2) * t / (m1 * m2),
        (2.0 * t * t + s * s / 2.0 - 2.0 * t * s) / (m1 * m2),
        t / m2,
        t / m1,
        t * t / (m1 * m2),
    ])
}

// ---- Delay-efficient operating point ----

/// High-SNR limits of the delay-efficient policy at minimum thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrDelayEfficient {
    /// Limit of the sum throughput in bits per channel use.
    pub r_sum_limit: f64,
    /// Limits of the two mean delays in slots.
    pub t1_limit: f64,
    pub t2_limit: f64,
    /// `f12 ~ f12_coeff / gamma` and likewise for the other flow and the
    /// system average.
    pub f12_coeff: f64,
    pub f21_coeff: f64,
    pub f_sys_coeff: f64,
}

/// Coefficients of the delay-efficient policy at minimum thresholds.
///
/// Both buffers then hold at most one packet, each delay tends to one slot,
/// and the outage fractions pick up two wasted-slot effects: the chance that
/// a flow's own uplink fails and the chance that the slot is spent on the
/// other flow's recovery.
pub fn high_snr_delay_efficient(
    omega1: f64,
    omega2: f64,
    r0: f64,
) -> Result<HighSnrDelayEfficient, Error> {
    check_positive(&[("omega1", omega1), ("omega2", omega2), ("r0", r0)])?;
    let t = thr(r0);
    let f12_coeff = (omega1 + 3.0 * omega2) * t / (2.0 * omega1 * omega2);
    let f21_coeff = (3.0 * omega1 + omega2) * t / (2.0 * omega1 * omega2);
    Ok(HighSnrDelayEfficient {
        r_sum_limit: r0,
        t1_limit: 1.0,
        t2_limit: 1.0,
        f12_coeff,
        f21_coeff,
        f_sys_coeff: (omega1 + omega2) * t / (omega1 * omega2),
    })
}

impl HighSnrDelayEfficient {
    /// System outage fraction predicted at a linear-scale transmit SNR.
    pub fn f_sys_at(&self, gamma: f64) -> f64 {
        self.f_sys_coeff / gamma
    }

    /// Transmit SNR at which the predicted system outage fraction equals
    /// `target`.
    pub fn gamma_for_f_sys(&self, target: f64) -> f64 {
        self.f_sys_coeff / target
    }
}

// ---- Throughput-efficient operating point ----

/// High-SNR limits of the throughput-efficient policy at minimum thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighSnrThroughputEfficient {
    pub r_sum_limit: f64,
    /// Limits of the two mean delays in slots; they grow with the buffer
    /// capacities because the limiting occupancy spreads along the reachable
    /// boundary states.
    pub t1_limit: f64,
    pub t2_limit: f64,
    /// `f12 ~ f12_coeff / gamma` and likewise for the other flow and the
    /// system average. The coefficients carry a finite-capacity factor that
    /// tends to one as the buffers grow.
    pub f12_coeff: f64,
    pub f21_coeff: f64,
    pub f_sys_coeff: f64,
}

/// Coefficients of the throughput-efficient policy at minimum thresholds,
/// valid for symmetric links only.
///
/// The system outage coefficient is `(c1 + c2) / (c1 + c2 - 1) * thr / omega`
/// for capacities `c1, c2`: the infinite-buffer value `thr / omega` is only
/// approached from above because the limiting occupancy wastes a vanishing
/// but slot-proportional fraction of time at the capacity boundary. The
/// per-flow splits put the weight `c1 + 3 c2` on flow 1 and `3 c1 + c2` on
/// flow 2, over `2 (c1 + c2 - 1)`.
///
/// With asymmetric gains the limiting occupancy no longer spreads uniformly
/// and no closed form is provided; such inputs fail with
/// [`Error::AsymmetricChannel`].
pub fn high_snr_throughput_efficient(
    omega1: f64,
    omega2: f64,
    r0: f64,
    l1_max: u32,
    l2_max: u32,
) -> Result<HighSnrThroughputEfficient, Error> {
    check_positive(&[("omega1", omega1), ("omega2", omega2), ("r0", r0)])?;
    if (omega1 - omega2).abs() > 1e-9 * omega1.max(omega2) {
        return Err(Error::AsymmetricChannel(omega1, omega2));
    }
    if l1_max == 0 || l2_max == 0 {
        return Err(Error::InvalidParameter(
            "buffer capacities must be at least one".into(),
        ));
    }
    let (c1, c2) = (l1_max as f64, l2_max as f64);
    let span = c1 + c2 - 1.0;
    let unit = thr(r0) / omega1;
    Ok(HighSnrThroughputEfficient {
        r_sum_limit: r0,
        t1_limit: (c1 * c1 + c2 - 1.0) / span,
        t2_limit: (c2 * c2 + c1 - 1.0) / span,
        f12_coeff: (c1 + 3.0 * c2) / (2.0 * span) * unit,
        f21_coeff: (3.0 * c1 + c2) / (2.0 * span) * unit,
        f_sys_coeff: (c1 + c2) / span * unit,
    })
}

impl HighSnrThroughputEfficient {
    /// System outage fraction predicted at a linear-scale transmit SNR.
    pub fn f_sys_at(&self, gamma: f64) -> f64 {
        self.f_sys_coeff / gamma
    }

    /// Transmit SNR at which the predicted system outage fraction equals
    /// `target`.
    pub fn gamma_for_f_sys(&self, target: f64) -> f64 {
        self.f_sys_coeff / target
    }
}

// ---- Unconstrained reference ----

/// Outage coefficient of delay-unconstrained bidirectional relaying, where
/// every packet may wait arbitrarily long and only the weaker link limits
/// performance: `f_sys ~ thr / (min(omega) * gamma)`.
pub fn unconstrained_f_sys_coeff(omega1: f64, omega2: f64, r0: f64) -> f64 {
    assert!(omega1 > 0.0 && omega2 > 0.0 && r0 > 0.0);
    thr(r0) / omega1.min(omega2)
}

/// SNR penalty of the delay-efficient constraint over unconstrained
/// operation, in dB: `10 log10(1 + min(omega) / max(omega))`, at most about
/// `3.01` dB for symmetric links.
pub fn snr_gap_db(omega1: f64, omega2: f64) -> f64 {
    assert!(omega1 > 0.0 && omega2 > 0.0);
    let (lo, hi) = (omega1.min(omega2), omega1.max(omega2));
    10.0 * (1.0 + lo / hi).log10()
}
