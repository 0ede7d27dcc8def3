//! Block-fading channel model and instantaneous decodability regions.
//!
//! Both user-relay links experience independent Rayleigh block fading: the
//! instantaneous SNR of link `j` in a slot is exponentially distributed with
//! mean `omega_j * gamma`, where `gamma` is the transmit SNR common to all
//! nodes and `omega_j` the average channel gain. All transmissions use the
//! same fixed rate `r0` bits/symbol, so decodability in a slot depends on two
//! thresholds only:
//!
//! * `gamma_thr = 2^r0 - 1` for any point-to-point transmission, and
//! * `gamma_thr_sum = 2^(2 r0) - 1` for the sum-rate constraint of the
//!   multiple-access uplink.
//!
//! The SNR plane splits into five disjoint regions, ordered from best to
//! worst: both links and the sum constraint good ([`SnrRegion::R1`]), both
//! links good but not the sum ([`SnrRegion::R2`]), only link 1 good
//! ([`SnrRegion::R3`]), only link 2 good ([`SnrRegion::R4`]), neither good
//! ([`SnrRegion::R5`]). Boundary values count as decodable.
//!
//! # Example
//!
//! ```
//! use bufrelay_core::channel::{self, LinkConfig};
//!
//! // Symmetric links, 10 dB transmit SNR, rate 1 bit/symbol.
//! let c = LinkConfig::from_db(1.0, 1.0, 10.0, 1.0).unwrap();
//! let p = channel::region_probs_exact(&c);
//! assert!((p.sum() - 1.0).abs() < 1e-12);
//! ```

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::error::Error;

// ---- Configuration and sample types ----

/// Static description of the two fading links and the transmission rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig {
    /// Average channel gain of the user-1 <-> relay link.
    pub omega1: f64,
    /// Average channel gain of the user-2 <-> relay link.
    pub omega2: f64,
    /// Transmit SNR (linear scale), identical at the users and the relay.
    pub gamma: f64,
    /// Fixed transmission rate in bits/symbol; one packet carries `r0` bits.
    pub r0: f64,
    /// Decodability threshold for point-to-point modes, `2^r0 - 1`.
    pub gamma_thr: f64,
    /// Sum-rate threshold for the multiple-access mode, `2^(2 r0) - 1`.
    pub gamma_thr_sum: f64,
}

impl LinkConfig {
    /// Builds a configuration from a linear-scale transmit SNR.
    ///
    /// All four inputs must be strictly positive.
    pub fn new(omega1: f64, omega2: f64, gamma: f64, r0: f64) -> Result<Self, Error> {
        for (name, v) in [
            ("omega1", omega1),
            ("omega2", omega2),
            ("gamma", gamma),
            ("r0", r0),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            omega1,
            omega2,
            gamma,
            r0,
            gamma_thr: f64::exp2(r0) - 1.0,
            gamma_thr_sum: f64::exp2(2.0 * r0) - 1.0,
        })
    }

    /// Builds a configuration from a transmit SNR given in dB.
    pub fn from_db(omega1: f64, omega2: f64, gamma_db: f64, r0: f64) -> Result<Self, Error> {
        Self::new(omega1, omega2, 10f64.powf(gamma_db / 10.0), r0)
    }

    /// Mean instantaneous SNR of link 1, `omega1 * gamma`.
    pub fn mean_snr1(&self) -> f64 {
        self.omega1 * self.gamma
    }

    /// Mean instantaneous SNR of link 2, `omega2 * gamma`.
    pub fn mean_snr2(&self) -> f64 {
        self.omega2 * self.gamma
    }
}

/// Instantaneous SNRs of the two links in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrPair {
    pub g1: f64,
    pub g2: f64,
}

/// Decodability region of one slot; see the module docs for the geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SnrRegion {
    /// Every mode decodable, including multiple access.
    R1,
    /// Both links decodable individually, multiple access not.
    R2,
    /// Only link 1 decodable.
    R3,
    /// Only link 2 decodable.
    R4,
    /// Neither link decodable.
    R5,
}

impl SnrRegion {
    /// All regions in index order.
    pub const ALL: [SnrRegion; 5] = [
        SnrRegion::R1,
        SnrRegion::R2,
        SnrRegion::R3,
        SnrRegion::R4,
        SnrRegion::R5,
    ];

    /// Zero-based index of the region, `R1 -> 0` through `R5 -> 4`.
    pub fn index(self) -> usize {
        match self {
            SnrRegion::R1 => 0,
            SnrRegion::R2 => 1,
            SnrRegion::R3 => 2,
            SnrRegion::R4 => 3,
            SnrRegion::R5 => 4,
        }
    }
}

/// Probabilities of the five SNR regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionProbs([f64; 5]);

impl RegionProbs {
    /// Validates that each entry lies in `[0, 1]` and that the entries sum to
    /// one within `1e-12`.
    pub fn new(p: [f64; 5]) -> Result<Self, Error> {
        for (i, &v) in p.iter().enumerate() {
            if !((-1e-15..=1.0 + 1e-12).contains(&v)) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "region probability {} out of range: {v}",
                    i + 1
                )));
            }
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "region probabilities sum to {s}, expected 1"
            )));
        }
        Ok(Self(p))
    }

    /// Wraps raw values without validation. Intended for leading-order
    /// expansions that do not sum to one exactly; never feed such values to
    /// the Markov builders.
    pub fn from_raw(p: [f64; 5]) -> Self {
        Self(p)
    }

    /// Probability of one region.
    pub fn p(&self, r: SnrRegion) -> f64 {
        self.0[r.index()]
    }

    /// Probabilities in region order `R1..R5`.
    pub fn as_array(&self) -> [f64; 5] {
        self.0
    }

    /// Sum of all five entries.
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

// ---- Operations ----

/// Maps one SNR draw to its decodability region. Threshold ties count as
/// decodable.
pub fn classify_region(c: &LinkConfig, s: SnrPair) -> SnrRegion {
    let ok1 = s.g1 >= c.gamma_thr;
    let ok2 = s.g2 >= c.gamma_thr;
    match (ok1, ok2) {
        (true, true) => {
            if s.g1 + s.g2 >= c.gamma_thr_sum {
                SnrRegion::R1
            } else {
                SnrRegion::R2
            }
        }
        (true, false) => SnrRegion::R3,
        (false, true) => SnrRegion::R4,
        (false, false) => SnrRegion::R5,
    }
}

/// Draws one slot of independent link SNRs from the given generator.
pub fn sample_snr<R: Rng + ?Sized>(c: &LinkConfig, rng: &mut R) -> SnrPair {
    // Exp takes the rate parameter, the reciprocal of the mean.
    let e1 = Exp::new(1.0 / c.mean_snr1()).expect("positive rate");
    let e2 = Exp::new(1.0 / c.mean_snr2()).expect("positive rate");
    SnrPair {
        g1: e1.sample(rng),
        g2: e2.sample(rng),
    }
}

/// Exact region probabilities under Rayleigh fading.
///
/// With `a_j = 1/(omega_j * gamma)`, the marginal success probabilities are
/// `exp(-a_j * gamma_thr)`, which fixes `P(R3)`, `P(R4)`, `P(R5)` and the
/// combined mass of `R1` and `R2`. The multiple-access failure slice `P(R2)`
/// is the integral of the product density over the triangle
/// `g1 >= thr, g2 >= thr, g1 + g2 < thr_sum`, which evaluates to
///
/// ```text
/// P(R2) = e^{-(a1+a2) thr} - e^{-a1 (S - thr) - a2 thr} - a1 e^{-a2 S} * I,
/// I     = (e^{-d thr} - e^{-d (S - thr)}) / d,    d = a1 - a2,  S = thr_sum,
/// ```
///
/// with `I = S - 2 thr` in the equal-rate limit `d -> 0`. `I` is computed via
/// `expm1` so nearly symmetric links do not lose precision to cancellation.
pub fn region_probs_exact(c: &LinkConfig) -> RegionProbs {
    let a1 = 1.0 / c.mean_snr1();
    let a2 = 1.0 / c.mean_snr2();
    let thr = c.gamma_thr;
    let s = c.gamma_thr_sum;

    let p_ok1 = (-a1 * thr).exp();
    let p_ok2 = (-a2 * thr).exp();

    let d = a1 - a2;
    let w = s - 2.0 * thr;
    let i = if d == 0.0 {
        w
    } else {
        -(-d * thr).exp() * f64::exp_m1(-d * w) / d
    };
    let p2 =
        (-(a1 + a2) * thr).exp() - (-a1 * (s - thr) - a2 * thr).exp() - a1 * (-a2 * s).exp() * i;
    let p2 = p2.max(0.0);
    let p1 = (p_ok1 * p_ok2 - p2).max(0.0);

    RegionProbs([
        p1,
        p2,
        p_ok1 * (1.0 - p_ok2),
        (1.0 - p_ok1) * p_ok2,
        (1.0 - p_ok1) * (1.0 - p_ok2),
    ])
}

/// Empirical region frequencies over `n` independent draws.
///
/// The returned entries sum to one exactly: the largest frequency is fixed up
/// to absorb the rounding of the individual divisions.
pub fn region_probs_monte_carlo<R: Rng + ?Sized>(
    c: &LinkConfig,
    n: u64,
    rng: &mut R,
) -> RegionProbs {
    assert!(n > 0, "need at least one draw");
    let mut counts = [0u64; 5];
    for _ in 0..n {
        let s = sample_snr(c, rng);
        counts[classify_region(c, s).index()] += 1;
    }
    let mut p = [0.0f64; 5];
    for (slot, &k) in p.iter_mut().zip(counts.iter()) {
        *slot = k as f64 / n as f64;
    }
    let argmax = (0..5).max_by(|&i, &j| p[i].total_cmp(&p[j])).unwrap();
    let rest: f64 = (0..5).filter(|&i| i != argmax).map(|i| p[i]).sum();
    p[argmax] = 1.0 - rest;
    RegionProbs(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(omega1: f64, omega2: f64, gamma: f64) -> LinkConfig {
        LinkConfig::new(omega1, omega2, gamma, 1.0).unwrap()
    }

    #[test]
    fn thresholds_follow_rate() {
        let c = cfg(1.0, 1.0, 10.0);
        assert_eq!(c.gamma_thr, 1.0);
        assert_eq!(c.gamma_thr_sum, 3.0);
        let c2 = LinkConfig::new(1.0, 1.0, 10.0, 2.0).unwrap();
        assert_eq!(c2.gamma_thr, 3.0);
        assert_eq!(c2.gamma_thr_sum, 15.0);
    }

    #[test]
    fn from_db_converts_once() {
        let c = LinkConfig::from_db(1.0, 1.0, 20.0, 1.0).unwrap();
        assert!((c.gamma - 100.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(LinkConfig::new(0.0, 1.0, 10.0, 1.0).is_err());
        assert!(LinkConfig::new(1.0, -1.0, 10.0, 1.0).is_err());
        assert!(LinkConfig::new(1.0, 1.0, f64::NAN, 1.0).is_err());
        assert!(LinkConfig::new(1.0, 1.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn classification_matches_hand_picked_points() {
        // r0 = 1 so thr = 1 and thr_sum = 3.
        let c = cfg(1.0, 1.0, 10.0);
        let case = |g1, g2| classify_region(&c, SnrPair { g1, g2 });
        assert_eq!(case(2.0, 2.0), SnrRegion::R1);
        assert_eq!(case(1.2, 1.4), SnrRegion::R2);
        assert_eq!(case(1.5, 0.5), SnrRegion::R3);
        assert_eq!(case(0.5, 1.5), SnrRegion::R4);
        assert_eq!(case(0.5, 0.5), SnrRegion::R5);
        // Boundary ties decode.
        assert_eq!(case(1.0, 2.0), SnrRegion::R1);
        assert_eq!(case(1.0, 1.0), SnrRegion::R2);
        assert_eq!(case(1.0, 0.99), SnrRegion::R3);
    }

    #[test]
    fn every_draw_lands_in_exactly_one_region() {
        let c = cfg(0.25, 1.0, 5.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let s = sample_snr(&c, &mut rng);
            let r = classify_region(&c, s);
            let ok1 = s.g1 >= c.gamma_thr;
            let ok2 = s.g2 >= c.gamma_thr;
            let sum_ok = s.g1 + s.g2 >= c.gamma_thr_sum;
            let memberships = [
                ok1 && ok2 && sum_ok,
                ok1 && ok2 && !sum_ok,
                ok1 && !ok2,
                !ok1 && ok2,
                !ok1 && !ok2,
            ];
            assert_eq!(memberships.iter().filter(|&&m| m).count(), 1);
            assert!(memberships[r.index()]);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let c = cfg(1.0, 1.0, 10.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100)
                .map(|_| sample_snr(&c, &mut rng))
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn empirical_mean_matches_configured_mean() {
        let c = cfg(1.0, 1.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 1_000_000u64;
        let mut sum = 0.0;
        for _ in 0..n {
            sum += sample_snr(&c, &mut rng).g1;
        }
        let mean = sum / n as f64;
        assert!((mean - 10.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn tail_probability_matches_closed_form() {
        // At mean SNR 1 the per-link success probability is exp(-1).
        let c = cfg(1.0, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 2_000_000u64;
        let mut hits = 0u64;
        for _ in 0..n {
            if sample_snr(&c, &mut rng).g1 >= c.gamma_thr {
                hits += 1;
            }
        }
        let freq = hits as f64 / n as f64;
        assert!((freq - (-1.0f64).exp()).abs() < 2e-3, "freq {freq}");
    }

    #[test]
    fn exact_probs_are_a_distribution() {
        for &(o1, o2, g) in &[
            (1.0, 1.0, 10.0),
            (0.25, 1.0, 31.6),
            (2.0, 0.5, 0.3),
            (1.0, 1.0, 1e6),
            (0.9999999, 1.0, 17.3),
        ] {
            let p = region_probs_exact(&cfg(o1, o2, g));
            assert!((p.sum() - 1.0).abs() < 1e-12);
            for r in SnrRegion::ALL {
                assert!(p.p(r) >= 0.0 && p.p(r) <= 1.0);
            }
        }
    }

    #[test]
    fn worst_region_value_at_ten_db() {
        // (1 - e^{-1/10})^2 for symmetric links at linear SNR 10.
        let p = region_probs_exact(&cfg(1.0, 1.0, 10.0));
        let expected = (1.0 - (-0.1f64).exp()).powi(2);
        assert!((p.p(SnrRegion::R5) - expected).abs() < 1e-15);
        assert!((expected - 9.055_917_006e-3).abs() < 1e-9);
    }

    #[test]
    fn best_region_dominates_at_high_snr() {
        let p = region_probs_exact(&cfg(1.0, 1.0, 1e6));
        assert!(p.p(SnrRegion::R1) > 1.0 - 1e-5);
        for r in [SnrRegion::R2, SnrRegion::R3, SnrRegion::R4, SnrRegion::R5] {
            assert!(p.p(r) < 1e-5);
        }
    }

    #[test]
    fn multiple_access_slice_matches_quadrature() {
        // Midpoint quadrature of the product density over the failure
        // triangle, as an independent oracle for the closed form.
        for &(o1, o2, g) in &[(1.0, 1.0, 10.0), (0.25, 1.0, 31.6), (3.0, 0.7, 2.0)] {
            let c = cfg(o1, o2, g);
            let a1 = 1.0 / c.mean_snr1();
            let a2 = 1.0 / c.mean_snr2();
            let (thr, s) = (c.gamma_thr, c.gamma_thr_sum);
            let n = 4000;
            let h = (s - 2.0 * thr) / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let x = thr + (k as f64 + 0.5) * h;
                let inner = (-a2 * thr).exp() - (-a2 * (s - x)).exp();
                acc += a1 * (-a1 * x).exp() * inner * h;
            }
            let p2 = region_probs_exact(&c).p(SnrRegion::R2);
            assert!(
                (p2 - acc).abs() < 1e-8,
                "closed form {p2} vs quadrature {acc}"
            );
        }
    }

    #[test]
    fn exact_probs_match_monte_carlo() {
        let c = cfg(0.25, 1.0, 10.0);
        let exact = region_probs_exact(&c);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 10_000_000u64;
        let mc = region_probs_monte_carlo(&c, n, &mut rng);
        assert_eq!(mc.sum(), 1.0);
        for r in SnrRegion::ALL {
            let p = exact.p(r);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (mc.p(r) - p).abs() <= 3.0 * se + 1e-12,
                "{r:?}: exact {p}, mc {}",
                mc.p(r)
            );
        }
    }

    #[test]
    fn exact_probs_approach_leading_order() {
        let c = cfg(0.5, 2.0, 1e4);
        let p = region_probs_exact(&c);
        let thr = c.gamma_thr;
        let lead3 = thr / (c.omega2 * c.gamma);
        let lead4 = thr / (c.omega1 * c.gamma);
        let lead5 = thr * thr / (c.omega1 * c.omega2 * c.gamma * c.gamma);
        let lead1_gap = (c.omega1 + c.omega2) * thr / (c.omega1 * c.omega2 * c.gamma);
        let w = c.gamma_thr_sum - 2.0 * thr;
        let lead2 = w * w / (2.0 * c.omega1 * c.omega2 * c.gamma * c.gamma);
        assert!((p.p(SnrRegion::R3) - lead3).abs() / lead3 < 0.01);
        assert!((p.p(SnrRegion::R4) - lead4).abs() / lead4 < 0.01);
        assert!((p.p(SnrRegion::R5) - lead5).abs() / lead5 < 0.01);
        assert!(((1.0 - p.p(SnrRegion::R1)) - lead1_gap).abs() / lead1_gap < 0.01);
        assert!((p.p(SnrRegion::R2) - lead2).abs() / lead2 < 0.01);
    }

    #[test]
    fn region_probs_validation() {
        assert!(RegionProbs::new([0.2, 0.2, 0.2, 0.2, 0.2]).is_ok());
        assert!(RegionProbs::new([0.3, 0.2, 0.2, 0.2, 0.2]).is_err());
        assert!(RegionProbs::new([1.2, -0.2, 0.0, 0.0, 0.0]).is_err());
    }
}
