//! Command-line front end.
//!
//! Four subcommands: `verify-loss` (the loss certification battery), `train`
//! (replicated runs from a config, writing per-seed trajectory files and a
//! study summary), `rate-study` (train plus a log-log rate fit printed next
//! to the theoretical exponent), and `check-bounds` (the deterministic bound
//! battery for a config).
//!
//! Exit codes are a stable contract: 0 success, 1 bound or property
//! violation, 2 usage error, 3 config rejection, 4 I/O failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{Algorithm, ExperimentConfig, ReferenceKind};
use crate::error::{Error, Result};
use crate::experiments::{
    distance_step_constant, fit_rate, risk_step_constant, run_study, RateFit, RateVariant,
    StudyResult,
};
use crate::losses::{verify, ActivatingLoss};
use crate::trainers::AdmissibilityReport;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "okl", version, about = "Unregularized online kernel learning")]
struct Cli {
    /// Suppress non-error output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Run even when the schedule fails admissibility validation.
    #[arg(long)]
    force: bool,
    /// Worker threads for replicated runs (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Override the config's seed0.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the certification battery for a loss's declared constants.
    VerifyLoss {
        /// Loss name: least_squares, logistic, or qnorm.
        name: String,
        /// Exponent for the qnorm family, in (1, 2].
        #[arg(long)]
        q: Option<f64>,
        /// Samples per randomized check.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Seed for the randomized checks.
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Train replicated runs; writes per-seed trajectories and a summary.
    Train(StudyArgs),
    /// Replicated runs plus a fitted log-log slope against the theoretical
    /// exponent; needs at least 4 checkpoints.
    RateStudy {
        #[command(flatten)]
        study: StudyArgs,
        /// Skip training and feed the exact power law R = T^(-1/2) at the
        /// config's checkpoints through the fitting path.
        #[arg(long)]
        self_test: bool,
    },
    /// Deterministic bound checks: per-iteration norm envelopes, the
    /// step-growth sup, step power sums, and the log linearization grid.
    CheckBounds(StudyArgs),
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Io(_) => EXIT_IO,
        Error::Config(_) | Error::ConfigParse(_) | Error::Data(_) => EXIT_CONFIG,
        Error::UnsupportedLoss(_) | Error::InvalidParameter(_) => EXIT_USAGE,
        _ => EXIT_VIOLATION,
    }
}

/// Parses `args` and runs the selected command, returning the process exit
/// code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let quiet = cli.quiet;
    match cli.command {
        Command::VerifyLoss { name, q, samples, seed } => cmd_verify_loss(&name, q, samples, seed, quiet),
        Command::Train(study) => wrap(cmd_train(&study, quiet)),
        Command::RateStudy { study, self_test } => wrap(cmd_rate_study(&study, self_test, quiet)),
        Command::CheckBounds(study) => wrap(cmd_check_bounds(&study, quiet)),
    }
}

fn wrap(outcome: Result<i32>) -> i32 {
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

// ---------------------------------------------------------------------------
// verify-loss
// ---------------------------------------------------------------------------

fn cmd_verify_loss(name: &str, q: Option<f64>, samples: usize, seed: u64, quiet: bool) -> i32 {
    let loss = match ActivatingLoss::by_name(name, q) {
        Ok(loss) => loss,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let report = verify::run_battery(&loss, samples, seed);
    let mut all_passed = report.passed();
    if !quiet {
        println!(
            "loss {} (alpha = {}, L = {}):",
            report.loss_name,
            loss.alpha(),
            loss.holder_l()
        );
        for check in &report.checks {
            println!(
                "  {} {} ({})",
                if check.passed { "PASS" } else { "FAIL" },
                check.name,
                check.detail
            );
        }
    }
    // The logarithm linearization inequality is part of the module's
    // contract; it does not depend on the loss but is certified here too.
    let log_lin = verify::log_linearization_violation_worst(20);
    let log_lin_ok = log_lin <= verify::LOG_LIN_SLACK;
    all_passed &= log_lin_ok;
    if !quiet {
        println!(
            "  {} log linearization inequality (worst violation = {log_lin:.3e})",
            if log_lin_ok { "PASS" } else { "FAIL" }
        );
        println!("{}", if all_passed { "PASS" } else { "FAIL" });
    }
    if all_passed {
        EXIT_OK
    } else {
        EXIT_VIOLATION
    }
}

// ---------------------------------------------------------------------------
// train / rate-study
// ---------------------------------------------------------------------------

fn load_config(args: &StudyArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed0 = seed;
    }
    if let Some(out) = &args.out {
        cfg.out_dir = out.to_string_lossy().into_owned();
    }
    Ok(cfg)
}

#[derive(Debug, Serialize)]
struct SummaryCheckpoint {
    t: u64,
    mean_excess: f64,
    stderr_excess: f64,
    mean_heldout: f64,
}

#[derive(Debug, Serialize)]
struct InfoConstants {
    kappa: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    kappa_tilde: Option<f64>,
    risk_step_constant: f64,
    distance_step_constant: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm_growth_constant: Option<f64>,
}

/// The machine-readable study document written next to the trajectories.
#[derive(Debug, Serialize)]
struct StudySummary<'a> {
    reference_kind: &'static str,
    /// True when the excess is measured against a long-run trained proxy
    /// rather than an exact planted minimizer.
    proxy_reference: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    reference_risk: Option<f64>,
    envelope_checked: bool,
    envelope_precondition_met: bool,
    envelope_violations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    theoretical_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent_variant: Option<RateVariant>,
    seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
    admissibility: &'a AdmissibilityReport,
    info: InfoConstants,
    #[serde(skip_serializing_if = "Option::is_none")]
    rate_fit: Option<&'a RateFit>,
    config: &'a ExperimentConfig,
    checkpoints: Vec<SummaryCheckpoint>,
}

fn build_summary<'a>(cfg: &'a ExperimentConfig, result: &'a StudyResult) -> Result<StudySummary<'a>> {
    let loss = cfg.build_loss()?;
    let kernel = cfg.build_kernel()?;
    let kappa_tilde = match cfg.algorithm {
        Algorithm::Pairwise => Some(cfg.build_pair_kernel()?.kappa()),
        Algorithm::Pointwise => None,
    };
    let kappa_eff = kappa_tilde.unwrap_or_else(|| kernel.kappa());
    Ok(StudySummary {
        reference_kind: match result.reference_kind {
            ReferenceKind::Planted => "planted",
            _ => "proxy",
        },
        proxy_reference: result.reference_kind == ReferenceKind::Proxy,
        reference_risk: result.reference_risk,
        envelope_checked: result.runs.iter().any(|(_, r)| r.envelope_checked),
        envelope_precondition_met: result
            .runs
            .iter()
            .all(|(_, r)| !r.envelope_checked || r.envelope_precondition_met),
        envelope_violations: result.runs.iter().map(|(_, r)| r.envelope_violations.len()).sum(),
        theoretical_exponent: result.theoretical_exponent,
        exponent_variant: result.exponent_variant,
        seeds: result.runs.iter().map(|(s, _)| *s).collect(),
        warnings: result.warnings.clone(),
        admissibility: &result.admissibility,
        info: InfoConstants {
            kappa: kernel.kappa(),
            kappa_tilde,
            risk_step_constant: risk_step_constant(&loss, kappa_eff),
            distance_step_constant: distance_step_constant(&loss, kappa_eff),
            norm_growth_constant: loss.norm_growth_constant().ok(),
        },
        rate_fit: result.rate_fit.as_ref(),
        config: cfg,
        checkpoints: result
            .checkpoints
            .iter()
            .map(|s| SummaryCheckpoint {
                t: s.t,
                mean_excess: s.mean_excess,
                stderr_excess: s.stderr_excess,
                mean_heldout: s.mean_heldout,
            })
            .collect(),
    })
}

fn write_outputs(cfg: &ExperimentConfig, result: &StudyResult) -> Result<PathBuf> {
    let out_dir = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(out_dir)?;
    for (seed, record) in &result.runs {
        let mut buf = Vec::new();
        record.write_csv(&mut buf)?;
        std::fs::write(out_dir.join(format!("trajectory_seed{seed}.csv")), buf)?;
    }
    let summary = build_summary(cfg, result)?;
    let text = toml::to_string(&summary).map_err(|e| Error::ConfigParse(e.to_string()))?;
    std::fs::write(out_dir.join("study_summary.toml"), text)?;
    Ok(out_dir.to_path_buf())
}

fn print_admissibility(report: &AdmissibilityReport, quiet: bool) {
    if quiet {
        return;
    }
    println!(
        "admissibility: alpha={} c={} theta={}",
        report.alpha, report.c, report.theta
    );
    println!(
        "  step power sum finite: {}; step sum diverges: {}",
        report.power_sum_finite, report.step_sum_diverges
    );
    println!(
        "  pointwise rate regime: {} (exponent {})",
        report.pointwise_rate_valid, report.pointwise_exponent
    );
    if let Some(ok) = report.pairwise_step_ok {
        println!(
            "  pairwise step cap ok: {ok}; pairwise rate regime: {}; proven regime: {}",
            report.pairwise_rate_valid, report.pairwise_proven_regime
        );
    }
}

fn cmd_train(args: &StudyArgs, quiet: bool) -> Result<i32> {
    let cfg = load_config(args)?;
    let result = run_study(&cfg, args.force, args.workers)?;
    print_admissibility(&result.admissibility, quiet);
    let out = write_outputs(&cfg, &result)?;
    if !quiet {
        for w in &result.warnings {
            println!("note: {w}");
        }
        for s in &result.checkpoints {
            println!(
                "T={:>8}  mean excess {:+.6e}  stderr {:.3e}  mean risk {:.6}",
                s.t, s.mean_excess, s.stderr_excess, s.mean_heldout
            );
        }
        println!("wrote {} trajectories and study_summary.toml to {}", result.runs.len(), out.display());
    }
    Ok(EXIT_OK)
}

fn cmd_rate_study(args: &StudyArgs, self_test: bool, quiet: bool) -> Result<i32> {
    let cfg = load_config(args)?;
    let grid = cfg.checkpoints.checkpoints(cfg.t_max);
    if grid.len() < 4 {
        return Err(Error::Config(format!(
            "rate studies need at least 4 checkpoints, the config yields {}",
            grid.len()
        )));
    }
    if self_test {
        let points: Vec<(f64, f64)> =
            grid.iter().map(|&t| (t as f64, (t as f64).powf(-0.5))).collect();
        let fit = fit_rate(&points)?;
        if !quiet {
            println!("self-test fitted slope: {} (injected power law T^-0.5)", fit.slope);
        }
        return Ok(EXIT_OK);
    }
    let result = run_study(&cfg, args.force, args.workers)?;
    print_admissibility(&result.admissibility, quiet);
    let out = write_outputs(&cfg, &result)?;
    if !quiet {
        for w in &result.warnings {
            println!("note: {w}");
        }
        for s in &result.checkpoints {
            println!(
                "T={:>8}  mean excess {:+.6e}  stderr {:.3e}",
                s.t, s.mean_excess, s.stderr_excess
            );
        }
        match (&result.rate_fit, result.theoretical_exponent) {
            (Some(fit), Some(th)) => println!(
                "fitted slope {:+.4} vs theoretical exponent {:.4} (slope target {:+.4})",
                fit.slope, th, -th
            ),
            (Some(fit), None) => println!(
                "fitted slope {:+.4}; no theoretical exponent for this configuration",
                fit.slope
            ),
            _ => println!("no rate fit available"),
        }
        println!("wrote outputs to {}", out.display());
    }
    Ok(EXIT_OK)
}

// ---------------------------------------------------------------------------
// check-bounds
// ---------------------------------------------------------------------------

enum CheckStatus {
    Pass,
    Fail,
    Skipped,
    Info,
}

fn cmd_check_bounds(args: &StudyArgs, quiet: bool) -> Result<i32> {
    let cfg = load_config(args)?;
    cfg.validate()?;
    let loss = cfg.build_loss()?;
    let schedule = cfg.build_schedule()?;
    let mut checks: Vec<(String, CheckStatus, String)> = Vec::new();

    // Per-iteration norm envelope over the configured trajectories.
    match cfg.algorithm {
        Algorithm::Pointwise => {
            checks.push((
                "norm envelope".into(),
                CheckStatus::Skipped,
                "stated for the pairwise algorithm only".into(),
            ));
        }
        Algorithm::Pairwise if loss.alpha() != 1.0 => {
            checks.push((
                "norm envelope".into(),
                CheckStatus::Skipped,
                format!("needs a 1-activating loss, alpha = {}", loss.alpha()),
            ));
        }
        Algorithm::Pairwise => {
            // Risk evaluation is irrelevant here; disable it for speed.
            let mut bare = cfg.clone();
            bare.n_eval = 0;
            let result = run_study(&bare, args.force, args.workers)?;
            let violations: usize =
                result.runs.iter().map(|(_, r)| r.envelope_violations.len()).sum();
            let precondition_met =
                result.runs.iter().all(|(_, r)| r.envelope_precondition_met);
            if !precondition_met {
                let detail = format!(
                    "step cap not satisfied; outside precondition, informational only ({violations} nominal violations over {} runs)",
                    result.runs.len()
                );
                checks.push(("norm envelope".into(), CheckStatus::Info, detail));
            } else if violations == 0 {
                checks.push((
                    "norm envelope".into(),
                    CheckStatus::Pass,
                    format!("0 violations over {} runs of length {}", result.runs.len(), cfg.t_max),
                ));
            } else {
                let first = result
                    .runs
                    .iter()
                    .filter_map(|(seed, r)| {
                        r.envelope_violations.first().map(|v| (*seed, v.clone()))
                    })
                    .min_by_key(|(_, v)| v.t);
                let detail = match first {
                    Some((seed, v)) => format!(
                        "{violations} violations; first at iteration {} of seed {seed}: norm {} > envelope {}",
                        v.t, v.rkhs_norm, v.envelope
                    ),
                    None => format!("{violations} violations"),
                };
                checks.push(("norm envelope".into(), CheckStatus::Fail, detail));
            }
        }
    }

    // Step-growth sup against the squared norm-growth constant.
    if loss.alpha() == 1.0 {
        let excess = verify::step_sup_excess_worst(&loss, 100, cfg.seed0)?;
        let ok = excess <= verify::STEP_SUP_SLACK;
        checks.push((
            "step-growth sup".into(),
            if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            format!("worst excess over C_phi^2 = {excess:.3e} across 100 admissible steps"),
        ));
    } else {
        checks.push((
            "step-growth sup".into(),
            CheckStatus::Skipped,
            format!("needs a 1-activating loss, alpha = {}", loss.alpha()),
        ));
    }

    // Partial power sums against their closed-form cap.
    match schedule.power_sum_bound(loss.alpha()) {
        Ok(bound) => {
            let sum = schedule.power_partial_sum(loss.alpha(), 1_000_000);
            let ok = sum <= bound * (1.0 + 1e-6);
            checks.push((
                "step power sum".into(),
                if ok { CheckStatus::Pass } else { CheckStatus::Fail },
                format!("partial sum to 1e6 = {sum:.6e} vs cap {bound:.6e}"),
            ));
        }
        Err(_) => {
            checks.push((
                "step power sum".into(),
                CheckStatus::Skipped,
                format!(
                    "theta*(1+alpha) = {} <= 1: the power sum diverges",
                    schedule.theta() * (1.0 + loss.alpha())
                ),
            ));
        }
    }

    // Exact envelope below its closed form.
    if loss.alpha() == 1.0 {
        let c_phi = loss.norm_growth_constant()?;
        let mut gamma_sum = 0.0;
        let mut worst = f64::NEG_INFINITY;
        let mut worst_t = 0u64;
        for t in 2..=10_000u64 {
            gamma_sum += schedule.gamma(t);
            let exact = c_phi * gamma_sum.sqrt();
            let closed =
                crate::trainers::norm_envelope_closed_form(&schedule, &loss, t)?;
            if exact - closed > worst {
                worst = exact - closed;
                worst_t = t;
            }
        }
        let ok = worst <= 1e-12;
        checks.push((
            "envelope closed form".into(),
            if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            format!("worst exact-minus-closed gap {worst:.3e} at t = {worst_t}"),
        ));
    }

    // Logarithm linearization grid.
    let log_lin = verify::log_linearization_violation_worst(20);
    let ok = log_lin <= verify::LOG_LIN_SLACK;
    checks.push((
        "log linearization".into(),
        if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        format!("worst violation {log_lin:.3e} on the 20^3 grid"),
    ));

    let mut failed = false;
    for (name, status, detail) in &checks {
        let tag = match status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => {
                failed = true;
                "FAIL"
            }
            CheckStatus::Skipped => "SKIP",
            CheckStatus::Info => "INFO",
        };
        if !quiet {
            println!("{tag} {name}: {detail}");
        }
    }
    Ok(if failed { EXIT_VIOLATION } else { EXIT_OK })
}
