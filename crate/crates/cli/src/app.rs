//! Command-line surface: argument parsing, command drivers, exit codes.
//!
//! Exit code contract:
//! - 0: success (for `certify`, the stability condition holds)
//! - 1: usage problem — bad flags, unreadable or malformed config
//! - 2: the certified condition fails (or a command's precondition)
//! - 3: numerically ill-posed input — reduction, eigenanalysis, steady
//!   state or integration failed

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use cdroop_core::certify::{check_condition3, predict_steady_state};
use cdroop_core::dynamics::build_system_matrix;
use cdroop_core::lyapunov::{
    lemma1_check, lemma2_check, lyapunov_rate, LyapunovContext, RATE_SLACK,
};
use cdroop_core::sim::run_scenario;
use cdroop_core::spectral::analyze;
use cdroop_core::{CVector, Error, C64};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{build_problem, build_scenario, build_sim_config, Config, Problem};
use crate::output::write_csv;
use crate::report::{CertificateReport, KronReport, LemmasReport, SimulateReport, SteadyReport};

/// Certify, predict and simulate complex-droop converter networks.
#[derive(Debug, Parser)]
#[command(name = "cdroop", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Check the parametric stability condition and print the certificate.
    ///
    /// Exits 0 when the condition (including the droop penalty) holds,
    /// 2 when it fails; the certificate is printed either way.
    Certify(CommonArgs),
    /// Integrate a scenario and write the trajectory as CSV.
    Simulate(SimulateArgs),
    /// Print the predicted synchronous steady state.
    Steady(CommonArgs),
    /// Spot-check the decrease inequalities at seeded random states.
    Lemmas(LemmasArgs),
    /// Reduce the grid to its converter nodes and print the result.
    Kron(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the JSON problem description.
    #[arg(long)]
    config: PathBuf,
    /// Write the report here as well (simulate: the trajectory CSV).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the envelope's maximum angle spread, rad.
    #[arg(long)]
    delta_bar: Option<f64>,
    /// Override the envelope's maximum relative amplitude spread.
    #[arg(long)]
    gamma_bar: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct LemmasArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of random states to test.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    /// Seed for the state generator (required; no wall-clock fallback).
    #[arg(long)]
    seed: u64,
}

/// Failure carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    ConditionFailed(String),
    IllPosed(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::ConditionFailed(_) => 2,
            CliError::IllPosed(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::ConditionFailed(m) | CliError::IllPosed(m) => m,
        }
    }
}

/// Map a library error onto the exit-code contract.
pub fn classify(e: Error) -> CliError {
    match &e {
        Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::ZeroVoltageSetpoint { .. } => CliError::Usage(e.to_string()),
        Error::ConditionNotCertified => CliError::ConditionFailed(e.to_string()),
        _ => CliError::IllPosed(e.to_string()),
    }
}

/// Parse the arguments, run the command, return the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Certify(args) => cmd_certify(&args),
        Cmd::Simulate(args) => cmd_simulate(&args),
        Cmd::Steady(args) => cmd_steady(&args),
        Cmd::Lemmas(args) => cmd_lemmas(&args),
        Cmd::Kron(args) => cmd_kron(&args),
    }
}

fn load_config(path: &Path) -> Result<Config, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn load_problem(args: &CommonArgs) -> Result<Problem, CliError> {
    let cfg = load_config(&args.config)?;
    build_problem(&cfg, args.delta_bar, args.gamma_bar).map_err(classify)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::IllPosed(format!("report serialization failed: {e}")))
}

/// Write one line to stdout. A reader that stops early (e.g.
/// `cdroop certify ... | head`) closes the pipe; treat that as a normal
/// end of output, not a failure.
fn print_stdout(text: &str) -> Result<(), CliError> {
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
            Err(CliError::IllPosed(format!("cannot write report: {e}")))
        }
        _ => Ok(()),
    }
}

/// Print the report and mirror it to `--out` when given.
fn emit(json: &str, out: Option<&Path>) -> Result<(), CliError> {
    print_stdout(json)?;
    if let Some(path) = out {
        fs::write(path, format!("{json}\n"))
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn cmd_certify(args: &CommonArgs) -> Result<i32, CliError> {
    let p = load_problem(args)?;
    let cert = check_condition3(&p.net, &p.sp, &p.gains, &p.env).map_err(classify)?;
    let report = CertificateReport::from_certificate(&cert);
    emit(&to_json(&report)?, args.out.as_deref())?;
    Ok(if cert.condition3 { 0 } else { 2 })
}

fn cmd_steady(args: &CommonArgs) -> Result<i32, CliError> {
    let p = load_problem(args)?;
    let sys = build_system_matrix(&p.net, &p.sp, &p.gains).map_err(classify)?;
    let spectral = analyze(&sys).map_err(classify)?;
    let pred = predict_steady_state(&spectral, &p.sp, &p.gains).map_err(classify)?;
    let report = SteadyReport {
        lambda1: spectral.lambda1.into(),
        omega_sync: pred.omega_sync,
        amplitude_scale: pred.amplitude_scale,
        v_ss: pred.v_ss.iter().copied().collect(),
    };
    emit(&to_json(&report)?, args.out.as_deref())?;
    Ok(0)
}

fn cmd_lemmas(args: &LemmasArgs) -> Result<i32, CliError> {
    let p = load_problem(&args.common)?;
    if p.gains.alpha <= 0.0 {
        return Err(CliError::ConditionFailed(
            "the decrease inequalities need a positive amplitude gain alpha".into(),
        ));
    }
    let cert = check_condition3(&p.net, &p.sp, &p.gains, &p.env).map_err(classify)?;
    if !cert.condition3 {
        return Err(CliError::ConditionFailed(format!(
            "stability condition fails (margin {:.6e}); nothing to check",
            cert.margin_c
        )));
    }
    let sys = build_system_matrix(&p.net, &p.sp, &p.gains).map_err(classify)?;
    let ctx = LyapunovContext::new(&sys, &cert.spectral, &cert, &p.sp).map_err(classify)?;
    let projector = cert.spectral.projector();

    // Sample magnitudes log-uniformly in [0.05, 2] times the steady
    // amplitude, phases uniformly: the inequalities are global, so wide
    // coverage is the point.
    let base: Vec<f64> = match &cert.predicted {
        Ok(pred) => pred.v_ss.iter().copied().collect(),
        Err(_) => p.sp.v_star.iter().copied().collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let (lo, hi) = (0.05_f64.ln(), 2.0_f64.ln());

    let mut lemma1_failures = 0usize;
    let mut lemma2_failures = 0usize;
    let mut rate_bound_failures = 0usize;
    let mut max_rate_gap = f64::NEG_INFINITY;
    for _ in 0..args.samples {
        let v = CVector::from_fn(p.net.n, |k, _| {
            let rho: f64 = rng.gen_range(lo..hi).exp();
            let theta: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            C64::from_polar(base[k] * rho, theta)
        });
        if !lemma1_check(&v, &projector, &p.sp, &cert.spectral).map_err(classify)? {
            lemma1_failures += 1;
        }
        if !lemma2_check(&v, &sys, &projector, cert.margin_c) {
            lemma2_failures += 1;
        }
        let (rate, bound) = lyapunov_rate(&ctx, &v);
        let gap = rate - bound;
        max_rate_gap = max_rate_gap.max(gap);
        if gap > RATE_SLACK * (1.0 + bound.abs()) {
            rate_bound_failures += 1;
        }
    }
    let all_hold = lemma1_failures == 0 && lemma2_failures == 0 && rate_bound_failures == 0;
    let report = LemmasReport {
        samples: args.samples,
        seed: args.seed,
        lemma1_failures,
        lemma2_failures,
        rate_bound_failures,
        max_rate_gap: (args.samples > 0).then_some(max_rate_gap),
        all_hold,
    };
    emit(&to_json(&report)?, args.common.out.as_deref())?;
    Ok(if all_hold { 0 } else { 2 })
}

fn cmd_kron(args: &CommonArgs) -> Result<i32, CliError> {
    let cfg = load_config(&args.config)?;
    let net = cfg.network.build().map_err(classify)?;
    let report = KronReport::from_model(&net);
    emit(&to_json(&report)?, args.out.as_deref())?;
    Ok(0)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<i32, CliError> {
    let p = load_problem(&args.common)?;
    let spec = p.scenario.as_ref().ok_or_else(|| {
        CliError::Usage("simulate needs a `scenario` section in the config".into())
    })?;
    let out_path = args
        .common
        .out
        .as_deref()
        .ok_or_else(|| CliError::Usage("simulate needs --out for the trajectory CSV".into()))?;
    let scenario = build_scenario(spec, p.net.n, args.seed).map_err(classify)?;
    let cfg = build_sim_config(spec.sim.as_ref());
    let outcome =
        run_scenario(&p.net, &p.sp, &p.gains, &p.env, &scenario, &cfg).map_err(classify)?;

    let file = fs::File::create(out_path)
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out_path.display())))?;
    let mut buf = std::io::BufWriter::new(file);
    write_csv(
        &mut buf,
        &outcome.trajectory,
        outcome.final_sync.as_ref().ok(),
    )
    .and_then(|()| buf.flush())
    .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", out_path.display())))?;

    let report =
        SimulateReport::from_outcome(&outcome, scenario.t_end, &out_path.display().to_string());
    print_stdout(&to_json(&report)?)?;
    Ok(0)
}
