//! The `mdpkit` command line.
//!
//! Exit codes: 0 success or certified, 1 usage, 2 parse or validation
//! failure, 3 not certified or iteration cap reached. Reports go to stdout,
//! diagnostics and timings to stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::certify::{certify_values_with, check_certificate, CertifyOptions};
use crate::error::MdpError;
use crate::format::{
    parse_certificate, parse_mdp, parse_values, write_certificate, write_finite_report, write_mdp,
    write_report,
};
use crate::generate::{generate_with_discount, Family};
use crate::numerics::{Float, Rational, Scalar};
use crate::solvers::{backward_induction, solve, Algorithm, MpiOrder, SolveParams, StopReason};

/// Environment variable overriding the default iteration cap.
pub const MAX_ITER_ENV: &str = "MDPKIT_MAX_ITER";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NOT_CERTIFIED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mdpkit", version, about = "Solve finite discounted MDPs exactly or in floating point")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve an infinite-horizon discounted MDP.
    Solve(SolveArgs),
    /// Solve a finite-horizon MDP by backward induction.
    SolveFinite(FiniteArgs),
    /// Certify external value estimates as ε-optimal with exact arithmetic.
    Certify(CertifyArgs),
    /// Re-check a stored certificate.
    CheckCert(CheckArgs),
    /// Generate an instance, solve it and print one table row.
    Bench(BenchArgs),
    /// Generate an instance and print it in MDP file format.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Exact,
    Float,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, value_parser = parse_algorithm)]
    alg: Algorithm,
    #[arg(long, default_value = "0.05")]
    epsilon: String,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    #[arg(long, value_parser = parse_mpi_order)]
    mpi_order: Option<MpiOrder>,
    /// Value file used as the initial estimate.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<u64>,
    mdpfile: PathBuf,
}

#[derive(Debug, Args)]
struct FiniteArgs {
    #[arg(long, default_value_t = 50)]
    horizon: usize,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    mdpfile: PathBuf,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long)]
    values: PathBuf,
    #[arg(long, default_value = "0.05")]
    epsilon: String,
    #[arg(long)]
    max_iter: Option<u64>,
    mdpfile: PathBuf,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(long)]
    cert: PathBuf,
    mdpfile: PathBuf,
}

#[derive(Debug, Args)]
struct InstanceArgs {
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// State count (random, chain) or side length (grid).
    #[arg(long)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Overrides the family's default discount.
    #[arg(long)]
    discount: Option<String>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_parser = parse_algorithm, default_value = "vi")]
    alg: Algorithm,
    #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
    backend: BackendArg,
    #[arg(long, default_value = "0.05")]
    epsilon: String,
    #[arg(long, value_parser = parse_mpi_order)]
    mpi_order: Option<MpiOrder>,
    #[arg(long)]
    max_iter: Option<u64>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
}

fn parse_algorithm(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: MdpError| e.to_string())
}

fn parse_mpi_order(s: &str) -> Result<MpiOrder, String> {
    s.parse().map_err(|e: MdpError| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: MdpError| e.to_string())
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<MdpError> for Failure {
    fn from(e: MdpError) -> Self {
        let code = match &e {
            MdpError::Usage(_) | MdpError::Domain(_) | MdpError::UnsupportedBackend(_) => EXIT_USAGE,
            MdpError::NotCertified(_) | MdpError::InvalidCertificate { .. } => EXIT_NOT_CERTIFIED,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("cannot read {}: {e}", path.display()),
    })
}

fn with_file<T>(path: &Path, r: crate::Result<T>) -> Result<T, Failure> {
    r.map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn literal<S: Scalar>(what: &str, text: &str) -> Result<S, Failure> {
    S::parse_literal(text).map_err(|e| usage(format!("--{what}: {e}")))
}

fn max_iterations(flag: Option<u64>) -> Result<Option<u64>, Failure> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(MAX_ITER_ENV) {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| usage(format!("{MAX_ITER_ENV}={text:?} is not a positive integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(rendered.as_bytes()) } else { err.write_all(rendered.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve(a) => match a.backend {
            BackendArg::Exact => solve_cmd::<Rational>(&a, out, err),
            BackendArg::Float => solve_cmd::<Float>(&a, out, err),
        },
        Command::SolveFinite(a) => match a.backend {
            BackendArg::Exact => finite_cmd::<Rational>(&a, out),
            BackendArg::Float => finite_cmd::<Float>(&a, out),
        },
        Command::Certify(a) => certify_cmd(&a, out),
        Command::CheckCert(a) => check_cmd(&a, out),
        Command::Bench(a) => match a.backend {
            BackendArg::Exact => bench_cmd::<Rational>(&a, out, err),
            BackendArg::Float => bench_cmd::<Float>(&a, out, err),
        },
        Command::Generate(a) => generate_cmd(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| Failure {
        code: EXIT_INPUT,
        message: format!("cannot write output: {e}"),
    })
}

fn solve_cmd<S: Scalar>(a: &SolveArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if a.alg == Algorithm::PolicyIteration && !S::is_exact() {
        return Err(usage("policy iteration requires exact backend"));
    }
    let epsilon: S = literal("epsilon", &a.epsilon)?;
    let m = with_file(&a.mdpfile, parse_mdp::<S>(&read(&a.mdpfile)?))?;
    let mut params = SolveParams::new(epsilon);
    params.max_iterations = max_iterations(a.max_iter)?;
    if let Some(order) = &a.mpi_order {
        params.mpi_order = order.clone();
    }
    if let Some(path) = &a.init {
        params.initial_values = Some(with_file(path, parse_values(&read(path)?, m.n_states()))?);
    }
    let started = Instant::now();
    let report = with_file(&a.mdpfile, solve(&m, a.alg, &params))?;
    let _ = writeln!(err, "time_ms {:.3}", started.elapsed().as_secs_f64() * 1e3);
    emit(out, &write_report(&report))?;
    Ok(if report.stop_reason == StopReason::IterationCap {
        let _ = writeln!(err, "error: iteration cap reached after {} iterations", report.iterations);
        EXIT_NOT_CERTIFIED
    } else {
        EXIT_OK
    })
}

fn finite_cmd<S: Scalar>(a: &FiniteArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let m = with_file(&a.mdpfile, parse_mdp::<S>(&read(&a.mdpfile)?))?;
    let (policy, values) = with_file(&a.mdpfile, backward_induction(&m, a.horizon))?;
    emit(out, &write_finite_report(&policy, &values))?;
    Ok(EXIT_OK)
}

fn certify_cmd(a: &CertifyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let epsilon: Rational = literal("epsilon", &a.epsilon)?;
    let m = with_file(&a.mdpfile, parse_mdp::<Rational>(&read(&a.mdpfile)?))?;
    let values = with_file(&a.values, parse_values(&read(&a.values)?, m.n_states()))?;
    let options = CertifyOptions {
        source: a.values.display().to_string(),
        max_iterations: max_iterations(a.max_iter)?,
    };
    let certificate = certify_values_with(&m, &values, &epsilon, &options)?;
    emit(out, &write_certificate(&certificate))?;
    Ok(EXIT_OK)
}

fn check_cmd(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let m = with_file(&a.mdpfile, parse_mdp::<Rational>(&read(&a.mdpfile)?))?;
    let certificate = with_file(&a.cert, parse_certificate::<Rational>(&read(&a.cert)?))?;
    check_certificate(&m, &certificate)?;
    emit(out, "certificate valid\n")?;
    Ok(EXIT_OK)
}

fn instance<S: Scalar>(a: &InstanceArgs) -> Result<crate::model::ExplicitMdp<S>, Failure> {
    let discount = match &a.discount {
        Some(text) => literal("discount", text)?,
        None => {
            let (p, q) = a.family.default_discount();
            S::from_ratio(p, q)?
        }
    };
    Ok(generate_with_discount(a.family, a.size, a.seed, discount)?)
}

fn bench_cmd<S: Scalar>(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    if a.alg == Algorithm::PolicyIteration && !S::is_exact() {
        return Err(usage("policy iteration requires exact backend"));
    }
    let epsilon: S = literal("epsilon", &a.epsilon)?;
    let m = instance::<S>(&a.instance)?;
    let mut params = SolveParams::new(epsilon);
    params.max_iterations = max_iterations(a.max_iter)?;
    if let Some(order) = &a.mpi_order {
        params.mpi_order = order.clone();
    }
    let started = Instant::now();
    let report = solve(&m, a.alg, &params)?;
    let _ = writeln!(err, "time_ms {:.3}", started.elapsed().as_secs_f64() * 1e3);
    let i = &a.instance;
    emit(
        out,
        &format!(
            "# family size seed alg backend states iterations sweeps stop\n{} {} {} {} {} {} {} {} {}\n",
            i.family,
            i.size,
            i.seed,
            a.alg,
            S::BACKEND,
            m.n_states(),
            report.iterations,
            report.sweeps,
            report.stop_reason
        ),
    )?;
    Ok(if report.stop_reason == StopReason::IterationCap { EXIT_NOT_CERTIFIED } else { EXIT_OK })
}

fn generate_cmd(a: &GenerateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let m = instance::<Rational>(&a.instance)?;
    emit(out, &write_mdp(&m))?;
    Ok(EXIT_OK)
}
