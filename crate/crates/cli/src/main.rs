//! `holomenta`: simulate, analyze and check nonholonomic systems with symmetry.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use holomenta_core::diagnostics::{self, CheckOptions};
use holomenta_core::integrate::{self, IntegratorOptions};
use holomenta_core::mechanics::{Energy, MPoint, Observable};
use holomenta_core::symmetry::{self, GaugeOptions, Verdict, DEFAULT_RESIDUAL_TOL};
use holomenta_core::systems;
use holomenta_core::Error;

use crate::config::Loaded;
use crate::output::{AnalysisReport, SamplesUsed, Table};

const TOL_ENV: &str = "HOLOMENTA_TOL";

#[derive(Parser)]
#[command(name = "holomenta", version, about = "Nonholonomic dynamics and horizontal gauge momenta")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the nonholonomic dynamics and write a CSV trajectory.
    Simulate(SimulateArgs),
    /// Search for horizontal gauge momenta and write a JSON report.
    Analyze(AnalyzeArgs),
    /// Run the invariant and drift suite of a builtin system.
    Check(CheckArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// One of: particle, disk, ball.
    #[arg(long)]
    builtin: Option<String>,
    /// Path to a JSON system config.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SystemArgs {
    #[command(flatten)]
    source: Source,
    /// Named vertical complement of a builtin (e.g. Wz, Wpaper).
    #[arg(long, requires = "builtin")]
    complement: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Integrator {
    Rk4,
    Rk45,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableSet {
    Auto,
    None,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Initial coordinates, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    q0: Option<Vec<f64>>,
    /// Initial quasi-velocities, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    v0: Option<Vec<f64>>,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    t_final: f64,
    /// Fixed step for rk4.
    #[arg(long, conflicts_with = "tol")]
    dt: Option<f64>,
    /// Error tolerance for rk45.
    #[arg(long)]
    tol: Option<f64>,
    /// Defaults to rk4 when --dt is given, rk45 otherwise.
    #[arg(long, value_enum)]
    integrator: Option<Integrator>,
    /// Number of uniform output times, endpoints included.
    #[arg(long, default_value_t = 201)]
    samples: usize,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `auto` appends every certified gauge momentum.
    #[arg(long, value_enum, default_value_t = ObservableSet::None)]
    observables: ObservableSet,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Length of the drift trajectory.
    #[arg(long, default_value_t = 10.0)]
    t_final: f64,
    /// Output JSON; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    builtin: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure classes, each with its own exit code.
enum Failure {
    Config(anyhow::Error),
    Integration(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::StepFailure { .. } | Error::NonFinite(_) => Failure::Integration(e.into()),
            other => Failure::Config(other.into()),
        }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Analyze(a) => analyze(a),
        Command::Check(a) => check(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Integration(e)) => {
            eprintln!("integration failed: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn residual_tol() -> anyhow::Result<f64> {
    match std::env::var(TOL_ENV) {
        Ok(s) => {
            let tol: f64 = s.trim().parse().map_err(|_| anyhow!("{TOL_ENV}=`{s}` is not a number"))?;
            if !(tol > 0.0 && tol.is_finite()) {
                bail!("{TOL_ENV} must be positive");
            }
            Ok(tol)
        }
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_RESIDUAL_TOL),
        Err(e) => bail!("{TOL_ENV}: {e}"),
    }
}

fn load(args: &SystemArgs) -> anyhow::Result<Loaded> {
    match (&args.source.builtin, &args.source.config) {
        (Some(name), _) => config::from_builtin(name, args.complement.as_deref()),
        (None, Some(path)) => config::from_config(path),
        (None, None) => bail!("one of --builtin or --config is required"),
    }
}

fn positive(name: &str, x: f64) -> anyhow::Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        bail!("{name} must be positive, got {x}");
    }
    Ok(x)
}

fn integrator_options(a: &SimulateArgs) -> anyhow::Result<IntegratorOptions> {
    let method = a.integrator.unwrap_or(if a.dt.is_some() { Integrator::Rk4 } else { Integrator::Rk45 });
    let opts = match method {
        Integrator::Rk4 => {
            if a.tol.is_some() {
                bail!("--tol applies to rk45 only");
            }
            IntegratorOptions::rk4(positive("dt", a.dt.unwrap_or(1e-3))?)
        }
        Integrator::Rk45 => {
            if a.dt.is_some() {
                bail!("--dt applies to rk4 only");
            }
            IntegratorOptions::rk45(positive("tol", a.tol.unwrap_or(1e-10))?)
        }
    };
    if a.samples < 2 {
        bail!("--samples must be at least 2");
    }
    Ok(opts.with_samples(a.samples))
}

/// Run the gauge momentum pipeline, mapping the assumption failures the
/// report can express into the report itself.
fn run_analysis(
    loaded: &Loaded,
    samples: &[MPoint],
    opts: &GaugeOptions,
    report: &mut AnalysisReport,
) -> Result<Option<symmetry::GaugeAnalysis>, Failure> {
    match symmetry::horizontal_gauge_momenta(&loaded.sys, &loaded.act, samples, opts) {
        Ok(a) => {
            report.fill(&a);
            Ok(Some(a))
        }
        Err(Error::DimensionAssumptionFailure(i)) => {
            report.dimension_assumption = false;
            report.message = Some(format!("dimension assumption fails at sample {i}"));
            Ok(None)
        }
        Err(Error::SplitFailure(msg)) => {
            report.rank_s = symmetry::rank_s(&loaded.sys, &loaded.act, &samples[0].q)?;
            report.message = Some(format!("algebra splitting failed: {msg}"));
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

fn gauge_options(loaded: &Loaded, samples: &[MPoint], t_final: f64) -> anyhow::Result<GaugeOptions> {
    Ok(GaugeOptions {
        residual_tol: residual_tol()?,
        initial: Some(loaded.initial.clone().unwrap_or_else(|| samples[0].clone())),
        t_final: positive("t-final", t_final)?,
        ..Default::default()
    })
}

fn simulate(a: SimulateArgs) -> Outcome {
    let loaded = load(&a.system)?;
    let sys = &loaded.sys;
    if !(a.t_final > 0.0 && a.t_final.is_finite()) {
        return Err(anyhow!("t_final must be positive, got {}", a.t_final).into());
    }
    let opts = integrator_options(&a)?;
    let m0 = match (&a.q0, &a.v0, &loaded.initial) {
        (Some(q), Some(v), _) => config::state(sys, q, v)?,
        (None, None, Some(m)) => m.clone(),
        (Some(q), None, Some(m)) => config::state(sys, q, m.v.as_slice())?,
        (None, Some(v), Some(m)) => config::state(sys, m.q.as_slice(), v)?,
        _ => return Err(anyhow!("--q0 and --v0 are required for this system").into()),
    };

    let mut names: Vec<String> = sys.coordinates().to_vec();
    names.extend((0..sys.rank()).map(|j| format!("v_{j}")));
    names.insert(0, "t".into());
    names.push("energy".into());

    let mut etas = Vec::new();
    if let ObservableSet::Auto = a.observables {
        let samples = loaded.samples(50, 0);
        let gauge = gauge_options(&loaded, &samples, 10.0)?;
        let mut report = AnalysisReport::new(sys.name(), sys.tol(), &gauge, SamplesUsed {
            count: samples.len(),
            seed: 0,
            source: loaded.sample_source(),
        });
        match run_analysis(&loaded, &samples, &gauge, &mut report)? {
            Some(analysis) => {
                for r in analysis.reports.iter().filter(|r| r.verdict == Verdict::Certified) {
                    names.push(format!("gauge_{}", etas.len()));
                    etas.push(r.eta.clone());
                }
            }
            None => eprintln!("warning: {}; no gauge momenta appended", report.message.unwrap_or_default()),
        }
    }

    let traj = integrate::integrate(sys, &m0, a.t_final, &opts)?;
    let mut table = Table::new(names);
    let mut row = Vec::new();
    for (t, m) in traj.times.iter().zip(&traj.states) {
        row.clear();
        row.push(*t);
        row.extend(m.q.iter());
        row.extend(m.v.iter());
        row.push(Energy.value(sys, m)?);
        for eta in &etas {
            row.push(symmetry::gauge_momentum(sys, &loaded.act, eta, m)?);
        }
        table.row(&row);
    }
    output::emit(a.out.as_deref(), &table.into_bytes())?;
    Ok(ExitCode::SUCCESS)
}

fn analyze(a: AnalyzeArgs) -> Outcome {
    let loaded = load(&a.system)?;
    if a.samples < 2 {
        return Err(anyhow!("--samples must be at least 2").into());
    }
    let samples = loaded.samples(a.samples, a.seed);
    if samples.len() < 2 {
        return Err(anyhow!("need at least two sample points").into());
    }
    for m in &samples {
        loaded.sys.validate_at(&m.q).map_err(|e| anyhow!("sample {:?}: {e}", m.q.as_slice()))?;
    }
    let gauge = gauge_options(&loaded, &samples, a.t_final)?;
    let sys = &loaded.sys;
    let mut report = AnalysisReport::new(sys.name(), sys.tol(), &gauge, SamplesUsed {
        count: samples.len(),
        seed: a.seed,
        source: loaded.sample_source(),
    });
    run_analysis(&loaded, &samples, &gauge, &mut report)?;
    output::emit(a.report.as_deref(), &report.to_json()?)?;
    if let Some(msg) = &report.message {
        eprintln!("{msg}");
    }
    Ok(if report.all_certified() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn check(a: CheckArgs) -> Outcome {
    let fx = systems::builtin(&a.builtin)?;
    let opts = CheckOptions {
        seed: a.seed,
        residual_tol: residual_tol()?,
        ..Default::default()
    };
    let lines = diagnostics::check_builtin(&fx, &opts)?;
    let width = lines.iter().map(|l| l.name.len()).max().unwrap_or(0);
    for l in &lines {
        println!(
            "{}  {:<width$}  {:>12.4e}  {}",
            if l.pass { "PASS" } else { "FAIL" },
            l.name,
            l.value,
            l.threshold
        );
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    if failed == 0 {
        println!("PASS  {}: all {} checks", fx.name, lines.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("FAIL  {}: {failed} of {} checks", fx.name, lines.len());
        Ok(ExitCode::from(1))
    }
}
