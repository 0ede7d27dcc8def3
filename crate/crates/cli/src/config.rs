//! Experiment configuration: defaults, a flat key-value file format, and
//! command-line overrides.
//!
//! The file grammar is line oriented. Blank lines and lines starting with
//! `#` are ignored; every other line must read `key = value`. Keys are
//! processed top to bottom and later assignments win, so `preset`, which
//! expands to a channel-gain pair, can be refined by later `omega` lines.
//! Command-line flags are applied after the file.
//!
//! Keys and defaults:
//!
//! ```text
//! preset         = symmetric          symmetric | asymmetric (gain shorthand)
//! omega1         = 1                  mean channel gain, user 1 <-> relay
//! omega2         = 1                  mean channel gain, user 2 <-> relay
//! r0             = 1                  packet rate in bits/symbol
//! gamma_db       = 10                 transmit SNR for single/validate
//! gamma_db_start = 0                  sweep axis (dB)
//! gamma_db_stop  = 40
//! gamma_db_step  = 2.5
//! l1_max         = 10                 buffer capacities
//! l2_max         = 10
//! l1_thr         = 0                  queue thresholds
//! l2_thr         = 0
//! policies       = delay-efficient,throughput-efficient
//! backends       = analytical        see [`Backend`] for the full list
//! n_slots        = 1000000            simulated slots per run
//! warmup         = 1000               leading slots excluded from statistics
//! seed           = 1                  simulation seed
//! output         = (stdout)           result destination
//! ```
//!
//! SNR values enter in dB here and are converted to linear scale exactly
//! once, when a job is handed to the evaluation backends.

use std::fmt;
use std::path::PathBuf;

use bufrelay_core::policy::{PolicyKind, Thresholds};

// ---- Errors ----

/// Configuration rejection with enough context to fix the input.
#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: String,
        message: String,
    },
    Syntax {
        line: usize,
        text: String,
    },
    UnknownKey(String),
    BadValue {
        key: String,
        value: String,
        expected: &'static str,
    },
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, message } => {
                write!(f, "cannot access `{path}`: {message}")
            }
            ConfigError::Syntax { line, text } => {
                write!(
                    f,
                    "config line {line}: expected `key = value`, got `{text}`"
                )
            }
            ConfigError::UnknownKey(key) => write!(f, "unknown config key `{key}`"),
            ConfigError::BadValue {
                key,
                value,
                expected,
            } => {
                write!(
                    f,
                    "config key `{key}`: cannot parse `{value}` as {expected}"
                )
            }
            ConfigError::Invalid(msg) => write!(f, "invalid configuration: {msg}"),
        }
    }
}

impl std::error::Error for ConfigError {}

// ---- Backends ----

/// Evaluation routes a sweep row can take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Exact chain: build, solve, read metrics off the stationary vector.
    Analytical,
    /// Slot-level Monte Carlo run of the adaptive policy.
    Simulation,
    /// High-SNR limits and outage coefficients.
    Asymptotic,
    /// Two-slot multiple-access / broadcast cycle without buffering.
    BaselineConventional,
    /// Two-phase cycle with unbounded buffers.
    BaselineBuffered,
}

impl Backend {
    pub const ALL: [Backend; 5] = [
        Backend::Analytical,
        Backend::Simulation,
        Backend::Asymptotic,
        Backend::BaselineConventional,
        Backend::BaselineBuffered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Backend::Analytical => "analytical",
            Backend::Simulation => "simulation",
            Backend::Asymptotic => "asymptotic",
            Backend::BaselineConventional => "baseline-conventional",
            Backend::BaselineBuffered => "baseline-buffered",
        }
    }

    /// Whether rows of this backend differ per policy.
    pub fn uses_policy(self) -> bool {
        !matches!(
            self,
            Backend::BaselineConventional | Backend::BaselineBuffered
        )
    }

    /// Whether rows of this backend depend on the seed.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            Backend::Simulation | Backend::BaselineConventional | Backend::BaselineBuffered
        )
    }

    fn parse(s: &str) -> Option<Backend> {
        Backend::ALL.into_iter().find(|b| b.name() == s)
    }
}

pub fn policy_name(kind: PolicyKind) -> &'static str {
    match kind {
        PolicyKind::DelayEfficient => "delay-efficient",
        PolicyKind::ThroughputEfficient => "throughput-efficient",
    }
}

fn parse_policy(s: &str) -> Option<PolicyKind> {
    match s {
        "delay-efficient" => Some(PolicyKind::DelayEfficient),
        "throughput-efficient" => Some(PolicyKind::ThroughputEfficient),
        _ => None,
    }
}

// ---- Specification ----

/// Fully resolved experiment description shared by all subcommands.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub omega1: f64,
    pub omega2: f64,
    pub r0: f64,
    /// Operating point for `single` and `validate`.
    pub gamma_db: f64,
    pub gamma_db_start: f64,
    pub gamma_db_stop: f64,
    pub gamma_db_step: f64,
    pub l1_max: u32,
    pub l2_max: u32,
    pub thresholds: Thresholds,
    pub policies: Vec<PolicyKind>,
    pub backends: Vec<Backend>,
    pub n_slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> SweepSpec {
        SweepSpec {
            omega1: 1.0,
            omega2: 1.0,
            r0: 1.0,
            gamma_db: 10.0,
            gamma_db_start: 0.0,
            gamma_db_stop: 40.0,
            gamma_db_step: 2.5,
            l1_max: 10,
            l2_max: 10,
            thresholds: Thresholds::new(0, 0),
            policies: vec![PolicyKind::DelayEfficient, PolicyKind::ThroughputEfficient],
            backends: vec![Backend::Analytical],
            n_slots: 1_000_000,
            warmup: 1_000,
            seed: 1,
            output: None,
        }
    }
}

fn bad(key: &str, value: &str, expected: &'static str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        expected,
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse().map_err(|_| bad(key, value, "a number"))
}

fn parse_u32(key: &str, value: &str) -> Result<u32, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(key, value, "a nonnegative integer"))
}

fn parse_u64(key: &str, value: &str) -> Result<u64, ConfigError> {
    value
        .parse()
        .map_err(|_| bad(key, value, "a nonnegative integer"))
}

/// Splits a comma-separated list, dropping duplicates but keeping order.
fn parse_list<T: PartialEq>(
    key: &str,
    value: &str,
    expected: &'static str,
    parse: impl Fn(&str) -> Option<T>,
) -> Result<Vec<T>, ConfigError> {
    let mut out = Vec::new();
    for item in value.split(',') {
        let item = item.trim();
        let parsed = parse(item).ok_or_else(|| bad(key, item, expected))?;
        if !out.contains(&parsed) {
            out.push(parsed);
        }
    }
    Ok(out)
}

pub fn parse_backend_list(key: &str, value: &str) -> Result<Vec<Backend>, ConfigError> {
    parse_list(
        key,
        value,
        "one of analytical, simulation, asymptotic, baseline-conventional, baseline-buffered",
        Backend::parse,
    )
}

pub fn parse_policy_list(key: &str, value: &str) -> Result<Vec<PolicyKind>, ConfigError> {
    parse_list(
        key,
        value,
        "one of delay-efficient, throughput-efficient",
        parse_policy,
    )
}

/// Parses `a,b` into an unsigned pair.
pub fn parse_pair(key: &str, value: &str) -> Result<(u32, u32), ConfigError> {
    let expected = "a pair `a,b` of nonnegative integers";
    let (a, b) = value
        .split_once(',')
        .ok_or_else(|| bad(key, value, expected))?;
    Ok((
        a.trim().parse().map_err(|_| bad(key, value, expected))?,
        b.trim().parse().map_err(|_| bad(key, value, expected))?,
    ))
}

impl SweepSpec {
    /// Applies one `key = value` assignment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "preset" => match value {
                "symmetric" => {
                    self.omega1 = 1.0;
                    self.omega2 = 1.0;
                }
                "asymmetric" => {
                    self.omega1 = 0.25;
                    self.omega2 = 1.0;
                }
                _ => return Err(bad(key, value, "symmetric or asymmetric")),
            },
            "omega1" => self.omega1 = parse_f64(key, value)?,
            "omega2" => self.omega2 = parse_f64(key, value)?,
            "r0" => self.r0 = parse_f64(key, value)?,
            "gamma_db" => self.gamma_db = parse_f64(key, value)?,
            "gamma_db_start" => self.gamma_db_start = parse_f64(key, value)?,
            "gamma_db_stop" => self.gamma_db_stop = parse_f64(key, value)?,
            "gamma_db_step" => self.gamma_db_step = parse_f64(key, value)?,
            "l1_max" => self.l1_max = parse_u32(key, value)?,
            "l2_max" => self.l2_max = parse_u32(key, value)?,
            "l1_thr" => self.thresholds.l1_thr = parse_u32(key, value)?,
            "l2_thr" => self.thresholds.l2_thr = parse_u32(key, value)?,
            "policies" => self.policies = parse_policy_list(key, value)?,
            "backends" => self.backends = parse_backend_list(key, value)?,
            "n_slots" => self.n_slots = parse_u64(key, value)?,
            "warmup" => self.warmup = parse_u64(key, value)?,
            "seed" => self.seed = parse_u64(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a whole config file.
    pub fn apply_file(&mut self, path: &std::path::Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: line.to_string(),
            })?;
            self.apply(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Cross-field invariants, checked after all sources are applied.
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, v) in [
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("r0", self.r0),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(ConfigError::Invalid(format!(
                    "`{name}` must be positive and finite, got {v}"
                )));
            }
        }
        if !self.gamma_db_step.is_finite() || self.gamma_db_step <= 0.0 {
            return Err(ConfigError::Invalid(format!(
                "`gamma_db_step` must be positive and finite, got {}",
                self.gamma_db_step
            )));
        }
        if self.gamma_db_start > self.gamma_db_stop {
            return Err(ConfigError::Invalid(format!(
                "`gamma_db_start` ({}) exceeds `gamma_db_stop` ({})",
                self.gamma_db_start, self.gamma_db_stop
            )));
        }
        if self.backends.is_empty() {
            return Err(ConfigError::Invalid("`backends` is empty".into()));
        }
        if self.policies.is_empty() && self.backends.iter().any(|b| b.uses_policy()) {
            return Err(ConfigError::Invalid(
                "`policies` is empty but a policy-dependent backend is selected".into(),
            ));
        }
        if self.l1_max == 0 || self.l2_max == 0 {
            return Err(ConfigError::Invalid(
                "buffer capacities must be at least one".into(),
            ));
        }
        if let Err(e) = self.thresholds.validate_for(self.l1_max, self.l2_max) {
            return Err(ConfigError::Invalid(e.to_string()));
        }
        if self.warmup >= self.n_slots {
            return Err(ConfigError::Invalid(format!(
                "`warmup` ({}) must be below `n_slots` ({})",
                self.warmup, self.n_slots
            )));
        }
        Ok(())
    }
}

// ---- Tests ----

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn temp_file(name: &str, contents: &str) -> PathBuf {
        let path =
            std::env::temp_dir().join(format!("bufrelay-config-{}-{name}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    #[test]
    fn defaults_validate() {
        SweepSpec::default().validate().unwrap();
    }

    #[test]
    fn file_assignments_apply_in_order() {
        let path = temp_file(
            "order",
            "# comment\n\npreset = asymmetric\nomega2 = 0.5\nseed = 7\n",
        );
        let mut spec = SweepSpec::default();
        spec.apply_file(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(spec.omega1, 0.25);
        assert_eq!(spec.omega2, 0.5);
        assert_eq!(spec.seed, 7);
    }

    #[test]
    fn unknown_key_is_named() {
        let mut spec = SweepSpec::default();
        let err = spec.apply("bogus_key", "1").unwrap_err();
        assert!(err.to_string().contains("bogus_key"));
    }

    #[test]
    fn bad_value_names_key_and_value() {
        let mut spec = SweepSpec::default();
        let err = spec.apply("l1_max", "many").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("l1_max") && msg.contains("many"));
    }

    #[test]
    fn syntax_error_reports_line_number() {
        let path = temp_file("syntax", "seed = 1\nnot a pair\n");
        let mut spec = SweepSpec::default();
        let err = spec.apply_file(&path).unwrap_err();
        std::fs::remove_file(&path).ok();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn lists_drop_duplicates_and_keep_order() {
        let backends =
            parse_backend_list("backends", "simulation, analytical, simulation").unwrap();
        assert_eq!(backends, vec![Backend::Simulation, Backend::Analytical]);
        let policies =
            parse_policy_list("policies", "throughput-efficient,delay-efficient").unwrap();
        assert_eq!(
            policies,
            vec![PolicyKind::ThroughputEfficient, PolicyKind::DelayEfficient]
        );
    }

    #[test]
    fn invariants_reject_bad_combinations() {
        let spec = SweepSpec {
            gamma_db_step: 0.0,
            ..SweepSpec::default()
        };
        assert!(spec.validate().is_err());

        let spec = SweepSpec {
            gamma_db_start: 50.0,
            ..SweepSpec::default()
        };
        assert!(spec.validate().is_err());

        let mut spec = SweepSpec::default();
        spec.backends.clear();
        assert!(spec.validate().is_err());

        let spec = SweepSpec {
            thresholds: Thresholds::new(11, 0),
            ..SweepSpec::default()
        };
        assert!(spec.validate().is_err());

        let mut spec = SweepSpec::default();
        spec.warmup = spec.n_slots;
        assert!(spec.validate().is_err());
    }
}
