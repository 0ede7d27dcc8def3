//! Result rows and their CSV serialization.
//!
//! The table starts with a comment line recording the tool version and the
//! seed, then a header row, then one row per (SNR point, backend, policy)
//! combination. Output is byte-stable for identical inputs: floats are
//! printed with Rust's shortest round-trip formatting and row order is
//! fixed by the sweep, not by completion order.
//!
//! Missing values are explicit. A delay without traffic prints as
//! `undefined`, as does any non-finite cell, and rows whose evaluation
//! failed keep the failure message in the final `error` column instead of
//! aborting the sweep.

use bufrelay_core::markov::Metrics;
use bufrelay_core::policy::{PolicyKind, Thresholds};

use crate::config::{policy_name, Backend};

// ---- Row type ----

/// One evaluated sweep point.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub gamma_db: f64,
    pub backend: Backend,
    /// Absent for policy-independent reference schemes.
    pub policy: Option<PolicyKind>,
    pub thresholds: Thresholds,
    pub outcome: Result<Metrics, String>,
    /// Recorded for seed-dependent backends only.
    pub seed: Option<u64>,
}

// ---- Formatting ----

pub fn comment_line(seed: u64) -> String {
    format!("# bufrelay {} seed={seed}\n", env!("CARGO_PKG_VERSION"))
}

pub fn header() -> String {
    "gamma_db,backend,policy,l1_thr,l2_thr,r12,r21,r_sum,f12,f21,f_sys,q1,q2,t1,t2,t_sys,seed,error\n"
        .to_string()
}

pub(crate) fn cell(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "undefined".to_string()
    }
}

pub(crate) fn opt_cell(v: Option<f64>) -> String {
    match v {
        Some(v) => cell(v),
        None => "undefined".to_string(),
    }
}

impl ResultRow {
    pub fn csv_line(&self) -> String {
        let policy = self.policy.map_or("-", policy_name);
        let seed = self.seed.map_or(String::new(), |s| s.to_string());
        let (cells, error) = match &self.outcome {
            Ok(m) => (
                [
                    cell(m.r12),
                    cell(m.r21),
                    cell(m.r_sum),
                    cell(m.f12),
                    cell(m.f21),
                    cell(m.f_sys),
                    cell(m.q1),
                    cell(m.q2),
                    opt_cell(m.t1),
                    opt_cell(m.t2),
                    opt_cell(m.t_sys),
                ],
                String::new(),
            ),
            Err(msg) => (
                std::array::from_fn(|_| "undefined".to_string()),
                msg.replace(',', ";").replace('\n', " "),
            ),
        };
        format!(
            "{},{},{policy},{},{},{},{seed},{error}\n",
            cell(self.gamma_db),
            self.backend.name(),
            self.thresholds.l1_thr,
            self.thresholds.l2_thr,
            cells.join(",")
        )
    }
}

// ---- Tests ----

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_metrics() -> Metrics {
        Metrics {
            r12: 0.25,
            r21: 0.5,
            r_sum: 0.75,
            f12: 0.5,
            f21: 0.0,
            f_sys: 0.25,
            q1: 0.125,
            q2: 0.25,
            t1: Some(1.5),
            t2: None,
            t_sys: None,
        }
    }

    /// Comma-separated fields in the header row.
    const COLUMNS: usize = 18;

    #[test]
    fn header_and_rows_have_matching_column_counts() {
        assert_eq!(header().trim_end().split(',').count(), COLUMNS);
        let row = ResultRow {
            gamma_db: 10.0,
            backend: Backend::Simulation,
            policy: Some(PolicyKind::DelayEfficient),
            thresholds: Thresholds::new(2, 3),
            outcome: Ok(sample_metrics()),
            seed: Some(42),
        };
        assert_eq!(row.csv_line().trim_end().split(',').count(), COLUMNS);
    }

    #[test]
    fn missing_delays_print_as_undefined() {
        let row = ResultRow {
            gamma_db: 0.0,
            backend: Backend::Analytical,
            policy: Some(PolicyKind::ThroughputEfficient),
            thresholds: Thresholds::new(0, 0),
            outcome: Ok(sample_metrics()),
            seed: None,
        };
        let line = row.csv_line();
        let cells: Vec<&str> = line.trim_end().split(',').collect();
        assert_eq!(cells[13], "1.5");
        assert_eq!(cells[14], "undefined");
        assert_eq!(cells[15], "undefined");
        assert_eq!(cells[16], "");
    }

    #[test]
    fn non_finite_cells_never_leak() {
        let mut m = sample_metrics();
        m.q1 = f64::NAN;
        m.q2 = f64::INFINITY;
        let row = ResultRow {
            gamma_db: 10.0,
            backend: Backend::Asymptotic,
            policy: Some(PolicyKind::DelayEfficient),
            thresholds: Thresholds::new(0, 0),
            outcome: Ok(m),
            seed: None,
        };
        let line = row.csv_line();
        assert!(!line.contains("NaN") && !line.contains("inf"));
        assert_eq!(line.matches("undefined").count(), 4);
    }

    #[test]
    fn failed_rows_keep_message_in_one_column() {
        let row = ResultRow {
            gamma_db: 10.0,
            backend: Backend::Asymptotic,
            policy: Some(PolicyKind::ThroughputEfficient),
            thresholds: Thresholds::new(0, 0),
            outcome: Err("asymmetric gains (0.25, 1), no closed form".into()),
            seed: None,
        };
        let line = row.csv_line();
        assert_eq!(line.trim_end().split(',').count(), COLUMNS);
        assert!(line.contains("asymmetric gains (0.25; 1); no closed form"));
    }

    #[test]
    fn comment_line_records_version_and_seed() {
        let line = comment_line(9);
        assert!(line.starts_with("# bufrelay "));
        assert!(line.contains("seed=9"));
    }
}
