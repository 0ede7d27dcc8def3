//! Experiment execution: SNR sweeps, single-point dumps, and the
//! cross-backend validation suite.
//!
//! Sweep rows are dispatched to the rayon worker pool and collected in
//! sweep order, so concurrent execution never reorders the table. A row
//! that fails to evaluate carries its error message instead of aborting
//! the whole sweep.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use bufrelay_core::asymptotics::{high_snr_delay_efficient, high_snr_throughput_efficient};
use bufrelay_core::channel::{region_probs_exact, region_probs_monte_carlo, LinkConfig};
use bufrelay_core::markov::{
    build_generic, build_prop1, build_te_min, closed_form_min_delay, evaluate, metrics,
    prop3_occupancy, reduce, stationary, Metrics, StationaryDist, TransitionMatrix,
};
use bufrelay_core::policy::{PolicyKind, Thresholds};
use bufrelay_core::sim::{run, run_baseline, BaselineKind, SimConfig, SimResult};
use bufrelay_core::Error;

use crate::config::{policy_name, Backend, SweepSpec};
use crate::table::{cell, comment_line, header, opt_cell, ResultRow};

// ---- Job enumeration ----

/// One evaluation request inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Job {
    pub gamma_db: f64,
    pub backend: Backend,
    pub policy: Option<PolicyKind>,
}

/// Swept SNR points in dB, both endpoints included.
pub fn sweep_points(spec: &SweepSpec) -> Vec<f64> {
    let mut points = Vec::new();
    let mut i = 0u32;
    loop {
        let g = spec.gamma_db_start + spec.gamma_db_step * f64::from(i);
        if g > spec.gamma_db_stop + 1e-9 {
            return points;
        }
        points.push(g);
        i += 1;
    }
}

fn jobs_at(spec: &SweepSpec, gamma_db: f64) -> Vec<Job> {
    let mut jobs = Vec::new();
    for &backend in &spec.backends {
        if backend.uses_policy() {
            for &policy in &spec.policies {
                jobs.push(Job {
                    gamma_db,
                    backend,
                    policy: Some(policy),
                });
            }
        } else {
            jobs.push(Job {
                gamma_db,
                backend,
                policy: None,
            });
        }
    }
    jobs
}

/// Sweep rows in output order: SNR ascending, then backends and policies in
/// the order the configuration listed them.
pub fn jobs(spec: &SweepSpec) -> Vec<Job> {
    sweep_points(spec)
        .into_iter()
        .flat_map(|g| jobs_at(spec, g))
        .collect()
}

// ---- Row evaluation ----

enum Evaluation {
    Chain(Metrics),
    Sim(SimResult),
}

impl Evaluation {
    fn metrics(&self) -> Metrics {
        match self {
            Evaluation::Chain(m) => m.clone(),
            Evaluation::Sim(r) => r.metrics.clone(),
        }
    }
}

fn sim_config(spec: &SweepSpec, link: LinkConfig, policy: PolicyKind) -> SimConfig {
    SimConfig {
        link,
        l1_max: spec.l1_max,
        l2_max: spec.l2_max,
        thresholds: spec.thresholds,
        policy,
        n_slots: spec.n_slots,
        warmup: spec.warmup,
        seed: spec.seed,
    }
}

/// High-SNR limits arranged like chain metrics. The mean queue levels have
/// no closed form here and are emitted as undefined.
fn asymptotic_metrics(spec: &SweepSpec, gamma: f64, kind: PolicyKind) -> Result<Metrics, Error> {
    let (r_sum, t1, t2, f12, f21, f_sys) = match kind {
        PolicyKind::DelayEfficient => {
            let a = high_snr_delay_efficient(spec.omega1, spec.omega2, spec.r0)?;
            (
                a.r_sum_limit,
                a.t1_limit,
                a.t2_limit,
                a.f12_coeff / gamma,
                a.f21_coeff / gamma,
                a.f_sys_coeff / gamma,
            )
        }
        PolicyKind::ThroughputEfficient => {
            let a = high_snr_throughput_efficient(
                spec.omega1,
                spec.omega2,
                spec.r0,
                spec.l1_max,
                spec.l2_max,
            )?;
            (
                a.r_sum_limit,
                a.t1_limit,
                a.t2_limit,
                a.f12_coeff / gamma,
                a.f21_coeff / gamma,
                a.f_sys_coeff / gamma,
            )
        }
    };
    Ok(Metrics {
        r12: r_sum / 2.0,
        r21: r_sum / 2.0,
        r_sum,
        f12,
        f21,
        f_sys,
        q1: f64::NAN,
        q2: f64::NAN,
        t1: Some(t1),
        t2: Some(t2),
        t_sys: Some((t1 + t2) / 2.0),
    })
}

fn evaluate_job(spec: &SweepSpec, job: &Job) -> Result<Evaluation, Error> {
    let link = LinkConfig::from_db(spec.omega1, spec.omega2, job.gamma_db, spec.r0)?;
    let policy = || job.policy.expect("policy-dependent backend");
    match job.backend {
        Backend::Analytical => {
            let probs = region_probs_exact(&link);
            evaluate(
                &probs,
                spec.l1_max,
                spec.l2_max,
                spec.thresholds,
                policy(),
                spec.r0,
            )
            .map(Evaluation::Chain)
        }
        Backend::Simulation => run(&sim_config(spec, link, policy())).map(Evaluation::Sim),
        Backend::Asymptotic => {
            asymptotic_metrics(spec, link.gamma, policy()).map(Evaluation::Chain)
        }
        Backend::BaselineConventional => run_baseline(
            &sim_config(spec, link, PolicyKind::DelayEfficient),
            BaselineKind::ConventionalMabc,
        )
        .map(Evaluation::Sim),
        Backend::BaselineBuffered => run_baseline(
            &sim_config(spec, link, PolicyKind::DelayEfficient),
            BaselineKind::BufferedMabc,
        )
        .map(Evaluation::Sim),
    }
}

pub fn compute_row(spec: &SweepSpec, job: &Job) -> ResultRow {
    ResultRow {
        gamma_db: job.gamma_db,
        backend: job.backend,
        policy: job.policy,
        thresholds: spec.thresholds,
        outcome: evaluate_job(spec, job)
            .map(|e| e.metrics())
            .map_err(|e| e.to_string()),
        seed: job.backend.is_stochastic().then_some(spec.seed),
    }
}

// ---- Subcommand: sweep ----

pub fn run_sweep(spec: &SweepSpec) -> String {
    let jobs = jobs(spec);
    let rows: Vec<ResultRow> = jobs.par_iter().map(|j| compute_row(spec, j)).collect();
    let mut out = comment_line(spec.seed);
    out.push_str(&header());
    for row in &rows {
        out.push_str(&row.csv_line());
    }
    out
}

// ---- Subcommand: single ----

fn metric_lines(m: &Metrics) -> String {
    format!(
        "r12 = {}\nr21 = {}\nr_sum = {}\nf12 = {}\nf21 = {}\nf_sys = {}\n\
         q1 = {}\nq2 = {}\nt1 = {}\nt2 = {}\nt_sys = {}\n",
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
    )
}

/// Evaluates every selected backend at the single operating point and dumps
/// all metrics as `key = value` lines. Returns the report and whether every
/// evaluation succeeded.
pub fn run_single(spec: &SweepSpec) -> (String, bool) {
    let mut out = comment_line(spec.seed);
    out += &format!(
        "omega1 = {}\nomega2 = {}\ngamma_db = {}\nr0 = {}\n\
         l1_max = {}\nl2_max = {}\nl1_thr = {}\nl2_thr = {}\n",
        spec.omega1,
        spec.omega2,
        spec.gamma_db,
        spec.r0,
        spec.l1_max,
        spec.l2_max,
        spec.thresholds.l1_thr,
        spec.thresholds.l2_thr,
    );
    let mut ok = true;
    match LinkConfig::from_db(spec.omega1, spec.omega2, spec.gamma_db, spec.r0) {
        Ok(link) => {
            for (i, p) in region_probs_exact(&link).as_array().iter().enumerate() {
                out += &format!("p_r{} = {}\n", i + 1, p);
            }
        }
        Err(e) => {
            out += &format!("error = {e}\n");
            return (out, false);
        }
    }
    for job in jobs_at(spec, spec.gamma_db) {
        out += &match job.policy {
            Some(p) => format!("\n[{} {}]\n", job.backend.name(), policy_name(p)),
            None => format!("\n[{}]\n", job.backend.name()),
        };
        match evaluate_job(spec, &job) {
            Ok(ev) => {
                out += &metric_lines(&ev.metrics());
                if let Evaluation::Sim(r) = &ev {
                    out += &format!(
                        "seed = {}\nslots_counted = {}\n",
                        spec.seed, r.slots_counted
                    );
                    if job.backend == Backend::Simulation {
                        let counts: Vec<String> =
                            r.mode_counts.iter().map(|c| c.to_string()).collect();
                        out += &format!("mode_counts = {}\n", counts.join(","));
                    }
                }
            }
            Err(e) => {
                out += &format!("error = {e}\n");
                ok = false;
            }
        }
    }
    (out, ok)
}

// ---- Subcommand: validate ----

enum Check {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn residual(chain: &TransitionMatrix, pi: &StationaryDist) -> f64 {
    let n = chain.space.len();
    let mut worst = 0.0f64;
    for to in 0..n {
        let mut acc = 0.0;
        for from in 0..n {
            acc += chain.prob(to, from) * pi.pi[from];
        }
        worst = worst.max((acc - pi.pi[to]).abs());
    }
    worst
}

fn bounded(value: f64, bound: f64, label: &str) -> Check {
    let detail = format!("{label} = {value:.3e}, bound {bound:.0e}");
    if value < bound {
        Check::Pass(detail)
    } else {
        Check::Fail(detail)
    }
}

/// Runs the cross-backend consistency suite at the configured operating
/// point. Returns the report and whether every executed check passed.
pub fn run_validate(spec: &SweepSpec) -> (String, bool) {
    let mut out = comment_line(spec.seed);
    out += &format!(
        "config: omega = ({}, {}), gamma_db = {}, r0 = {}, caps = ({}, {}), thresholds = ({}, {})\n",
        spec.omega1,
        spec.omega2,
        spec.gamma_db,
        spec.r0,
        spec.l1_max,
        spec.l2_max,
        spec.thresholds.l1_thr,
        spec.thresholds.l2_thr,
    );
    let link = match LinkConfig::from_db(spec.omega1, spec.omega2, spec.gamma_db, spec.r0) {
        Ok(link) => link,
        Err(e) => {
            out += &format!("check link-construction: FAILED ({e})\n");
            return (out, false);
        }
    };
    let probs = region_probs_exact(&link);
    let p = probs.as_array();
    if p[4] >= 0.99 {
        out += &format!(
            "warning: near-degenerate chain (idle-slot probability {:.6})\n",
            p[4]
        );
    }
    let min_thresholds = spec.thresholds == Thresholds::new(0, 0);
    let symmetric = (spec.omega1 - spec.omega2).abs() <= 1e-9 * spec.omega1.max(spec.omega2);
    // The closed-form identities divide by the transmission-region
    // probabilities; once those underflow the comparisons are meaningless.
    let degenerate = p[..4].iter().any(|v| *v < 1e-9);
    let mut checks: Vec<(&str, Check)> = Vec::new();

    let sum_err = (probs.sum() - 1.0).abs();
    checks.push((
        "region-probability-normalization",
        if p.iter().all(|v| (0.0..=1.0).contains(v)) {
            bounded(sum_err, 1e-12, "|sum - 1|")
        } else {
            Check::Fail("a region probability escapes [0, 1]".into())
        },
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mc = region_probs_monte_carlo(&link, 200_000, &mut rng).as_array();
    let mc_err = p
        .iter()
        .zip(&mc)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    checks.push((
        "monte-carlo-region-agreement",
        bounded(mc_err, 6e-3, "max |dp| over 200000 draws"),
    ));

    let de_generic = build_generic(
        &probs,
        spec.l1_max,
        spec.l2_max,
        spec.thresholds,
        PolicyKind::DelayEfficient,
    );
    let te_generic = build_generic(
        &probs,
        spec.l1_max,
        spec.l2_max,
        spec.thresholds,
        PolicyKind::ThroughputEfficient,
    );
    let de_analytic = build_prop1(&probs, spec.l1_max, spec.l2_max, spec.thresholds);
    checks.push((
        "delay-efficient-builder-equivalence",
        bounded(de_analytic.max_abs_diff(&de_generic), 1e-12, "max |dP|"),
    ));
    checks.push((
        "throughput-efficient-builder-equivalence",
        if min_thresholds {
            let analytic = build_te_min(&probs, spec.l1_max, spec.l2_max);
            bounded(analytic.max_abs_diff(&te_generic), 1e-12, "max |dP|")
        } else {
            Check::Skip("thresholds not minimum".into())
        },
    ));
    checks.push((
        "column-stochastic-transitions",
        bounded(
            de_generic
                .max_column_sum_error()
                .max(te_generic.max_column_sum_error()),
            1e-12,
            "max |col sum - 1|",
        ),
    ));

    let mut solved = Vec::new();
    let mut worst_residual = 0.0f64;
    let mut solver_failure = None;
    for (kind, full) in [
        (PolicyKind::DelayEfficient, &de_generic),
        (PolicyKind::ThroughputEfficient, &te_generic),
    ] {
        let chain = reduce(full);
        match stationary(&chain) {
            Ok(pi) => {
                worst_residual = worst_residual.max(residual(&chain, &pi));
                solved.push((kind, chain, pi));
            }
            Err(e) => solver_failure = Some(format!("{} chain: {e}", policy_name(kind))),
        }
    }
    checks.push((
        "stationary-residual",
        match solver_failure {
            Some(msg) => Check::Fail(msg),
            None => bounded(worst_residual, 1e-9, "max |M pi - pi|"),
        },
    ));

    checks.push((
        "closed-form-metrics",
        if !min_thresholds {
            Check::Skip("thresholds not minimum".into())
        } else if degenerate {
            Check::Skip("a transmission-region probability underflows".into())
        } else if let Some((_, chain, pi)) = solved
            .iter()
            .find(|(kind, _, _)| *kind == PolicyKind::DelayEfficient)
        {
            let m = metrics(chain, pi, spec.r0);
            let c = closed_form_min_delay(&probs, spec.r0);
            let worst = [
                (m.r12, c.r12),
                (m.r21, c.r21),
                (m.r_sum, c.r_sum),
                (m.q1, c.q1),
                (m.q2, c.q2),
                (m.t1.unwrap_or(0.0), c.t1.unwrap_or(0.0)),
                (m.t2.unwrap_or(0.0), c.t2.unwrap_or(0.0)),
            ]
            .iter()
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
            bounded(worst, 1e-10, "max |dm|")
        } else {
            Check::Skip("stationary solve failed upstream".into())
        },
    ));

    checks.push((
        "occupancy-recursion",
        if !min_thresholds {
            Check::Skip("thresholds not minimum".into())
        } else if spec.l1_max < 3 || spec.l2_max < 3 {
            Check::Skip("capacities below three".into())
        } else if degenerate {
            Check::Skip("a transmission-region probability underflows".into())
        } else if let Some((_, _, pi)) = solved
            .iter()
            .find(|(kind, _, _)| *kind == PolicyKind::ThroughputEfficient)
        {
            match prop3_occupancy(&probs, spec.l1_max, spec.l2_max) {
                Ok(direct) => {
                    let mut worst = 0.0f64;
                    for l1 in 0..=spec.l1_max {
                        for l2 in 0..=spec.l2_max {
                            worst = worst.max((direct.prob(l1, l2) - pi.prob(l1, l2)).abs());
                        }
                    }
                    bounded(worst, 1e-9, "max |dpi|")
                }
                Err(e) => Check::Fail(e.to_string()),
            }
        } else {
            Check::Skip("stationary solve failed upstream".into())
        },
    ));

    checks.push((
        "simulation-rate-agreement",
        if !spec.backends.contains(&Backend::Simulation) {
            Check::Skip("simulation backend not selected".into())
        } else if degenerate {
            Check::Skip("a transmission-region probability underflows".into())
        } else {
            let mut worst = 0.0f64;
            let mut failure = None;
            for &kind in &spec.policies {
                let chain = solved.iter().find(|(k, _, _)| *k == kind);
                let (_, chain, pi) = chain.expect("both policies solved above");
                let reference = metrics(chain, pi, spec.r0).r_sum;
                match run(&sim_config(spec, link, kind)) {
                    Ok(r) => worst = worst.max((r.metrics.r_sum - reference).abs() / reference),
                    Err(e) => failure = Some(e.to_string()),
                }
            }
            match failure {
                Some(msg) => Check::Fail(msg),
                None => bounded(worst, 2e-2, "rel |dr_sum|"),
            }
        },
    ));

    checks.push((
        "asymptotic-outage-consistency",
        if spec.gamma_db < 30.0 {
            Check::Skip("below 30 dB, outside the asymptotic regime".into())
        } else {
            let mut worst = 0.0f64;
            let chain_f = |kind| {
                evaluate(
                    &probs,
                    spec.l1_max,
                    spec.l2_max,
                    Thresholds::new(0, 0),
                    kind,
                    spec.r0,
                )
                .map(|m| m.f_sys)
            };
            let mut failure = None;
            match (
                chain_f(PolicyKind::DelayEfficient),
                asymptotic_metrics(spec, link.gamma, PolicyKind::DelayEfficient),
            ) {
                (Ok(exact), Ok(a)) => worst = worst.max((a.f_sys - exact).abs() / exact),
                (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
            }
            if symmetric {
                match (
                    chain_f(PolicyKind::ThroughputEfficient),
                    asymptotic_metrics(spec, link.gamma, PolicyKind::ThroughputEfficient),
                ) {
                    (Ok(exact), Ok(a)) => worst = worst.max((a.f_sys - exact).abs() / exact),
                    (Err(e), _) | (_, Err(e)) => failure = Some(e.to_string()),
                }
            }
            match failure {
                Some(msg) => Check::Fail(msg),
                None => bounded(worst, 0.1, "rel |df_sys|"),
            }
        },
    ));

    let mut failed = 0usize;
    for (name, check) in &checks {
        out += &match check {
            Check::Pass(d) => format!("check {name}: ok ({d})\n"),
            Check::Fail(d) => {
                failed += 1;
                format!("check {name}: FAILED ({d})\n")
            }
            Check::Skip(d) => format!("check {name}: skipped ({d})\n"),
        };
    }
    if failed == 0 {
        out += "all checks passed\n";
        (out, true)
    } else {
        out += &format!("{failed} check(s) FAILED\n");
        (out, false)
    }
}

// ---- Tests ----

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_points_include_both_endpoints() {
        let spec = SweepSpec {
            gamma_db_start: 0.0,
            gamma_db_stop: 40.0,
            gamma_db_step: 2.5,
            ..SweepSpec::default()
        };
        let points = sweep_points(&spec);
        assert_eq!(points.len(), 17);
        assert_eq!(points[0], 0.0);
        assert_eq!(*points.last().unwrap(), 40.0);
    }

    #[test]
    fn jobs_order_is_gamma_then_backend_then_policy() {
        let spec = SweepSpec {
            gamma_db_start: 0.0,
            gamma_db_stop: 5.0,
            gamma_db_step: 5.0,
            backends: vec![Backend::Analytical, Backend::BaselineConventional],
            ..SweepSpec::default()
        };
        let jobs = jobs(&spec);
        assert_eq!(jobs.len(), 2 * (2 + 1));
        assert_eq!(jobs[0].gamma_db, 0.0);
        assert_eq!(jobs[0].policy, Some(PolicyKind::DelayEfficient));
        assert_eq!(jobs[1].policy, Some(PolicyKind::ThroughputEfficient));
        assert_eq!(jobs[2].backend, Backend::BaselineConventional);
        assert_eq!(jobs[2].policy, None);
        assert_eq!(jobs[3].gamma_db, 5.0);
    }

    #[test]
    fn analytical_row_matches_direct_evaluation() {
        let spec = SweepSpec::default();
        let job = Job {
            gamma_db: 10.0,
            backend: Backend::Analytical,
            policy: Some(PolicyKind::DelayEfficient),
        };
        let row = compute_row(&spec, &job);
        let link = LinkConfig::from_db(1.0, 1.0, 10.0, 1.0).unwrap();
        let probs = region_probs_exact(&link);
        let expected = evaluate(
            &probs,
            10,
            10,
            Thresholds::new(0, 0),
            PolicyKind::DelayEfficient,
            1.0,
        )
        .unwrap();
        assert_eq!(row.outcome.unwrap(), expected);
        assert_eq!(row.seed, None);
    }

    #[test]
    fn asymptotic_rows_fail_cleanly_on_asymmetric_gains() {
        let spec = SweepSpec {
            omega1: 0.25,
            ..SweepSpec::default()
        };
        let job = Job {
            gamma_db: 40.0,
            backend: Backend::Asymptotic,
            policy: Some(PolicyKind::ThroughputEfficient),
        };
        let row = compute_row(&spec, &job);
        let line = row.csv_line();
        assert!(row.outcome.is_err());
        assert!(line.contains("undefined"));
    }

    #[test]
    fn sweep_output_is_reproducible() {
        let spec = SweepSpec {
            gamma_db_start: 10.0,
            gamma_db_stop: 15.0,
            gamma_db_step: 5.0,
            l1_max: 2,
            l2_max: 2,
            n_slots: 20_000,
            warmup: 100,
            backends: vec![Backend::Analytical, Backend::Simulation],
            ..SweepSpec::default()
        };
        let first = run_sweep(&spec);
        let second = run_sweep(&spec);
        assert_eq!(first, second);
        assert_eq!(first.lines().count(), 2 + 2 * 2 * 2);
    }

    #[test]
    fn validate_passes_on_default_config() {
        let spec = SweepSpec {
            l1_max: 4,
            l2_max: 4,
            ..SweepSpec::default()
        };
        let (report, ok) = run_validate(&spec);
        assert!(ok, "{report}");
        assert!(report.contains("all checks passed"));
        assert!(!report.contains("warning:"));
    }

    #[test]
    fn validate_warns_on_near_degenerate_chain() {
        let spec = SweepSpec {
            gamma_db: -20.0,
            l1_max: 3,
            l2_max: 3,
            ..SweepSpec::default()
        };
        let (report, ok) = run_validate(&spec);
        assert!(ok, "{report}");
        assert!(report.contains("warning: near-degenerate chain"));
    }
}
