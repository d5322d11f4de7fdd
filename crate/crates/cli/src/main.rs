//! `toeprec`: generate ground truth, sense, recover and run experiment suites.
//!
//! Exit codes: 0 success, 1 usage error, 2 solver did not converge, 3 an
//! invariant check failed. Every error goes to stderr prefixed with `ERROR:`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use toeprec::experiments::{sidecar_path, CheckRegistry, ExperimentParams, ExperimentRegistry, DEFAULT_SEED};
use toeprec::rng::stream;
use toeprec::sensing::{builtin_law, MeasurementSet, NormKind, SubgaussianLaw};
use toeprec::solver::{certify, recover_measurements, Certificate, RecoveryReport, SolverConfig};
use toeprec::{spike_toeplitz, Spike, SpikeModel, ToeplitzVector};

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_CONVERGED: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;

#[derive(Parser)]
#[command(name = "toeprec", version = env!("CARGO_PKG_VERSION"), about = "Low-rank Toeplitz recovery from rank-one measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a ground-truth Toeplitz matrix built from spectral spikes.
    Gen(GenArgs),
    /// Sense a ground truth and write the measurement set.
    Sense(SenseArgs),
    /// Recover a matrix from a measurement set and write the solver report.
    Recover(RecoverArgs),
    /// Success-rate grid over (n, spikes, m, law).
    Phase(ExperimentArgs),
    /// Spectral-norm deviation of summed projected outer products.
    Specnorm(ExperimentArgs),
    /// Small-ball probabilities over unit Toeplitz directions.
    Smallball(ExperimentArgs),
    /// Recovery error against the noise level.
    Noise(ExperimentArgs),
    /// Nuclear-to-Frobenius ratio on certified descent directions.
    Descent(ExperimentArgs),
    /// Run the invariant suite and print one line per check.
    Verify {
        /// Smaller sample sizes.
        #[arg(long)]
        quick: bool,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    /// Spike `frequency:amplitude`, repeatable. Without any, random spikes are drawn.
    #[arg(long = "spike", value_parser = parse_spike)]
    spikes: Vec<Spike>,
    /// Number of random spikes when no `--spike` is given.
    #[arg(long, default_value_t = 1)]
    random_spikes: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SenseArgs {
    /// Ground-truth JSON written by `gen`.
    #[arg(long)]
    truth: PathBuf,
    #[arg(long, default_value = "gaussian")]
    law: String,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    /// Noise norm: 1, 2 or inf.
    #[arg(long, default_value = "2")]
    p: NormKind,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Noise radius as a fraction of eta.
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f64,
    /// Omit the sensing vectors; they are regenerated from the seed on load.
    #[arg(long)]
    lazy: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RecoverArgs {
    #[arg(long)]
    measurements: PathBuf,
    /// Solver settings as JSON or `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ground truth for error reporting.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated dimensions.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Comma-separated spike counts.
    #[arg(long, value_delimiter = ',')]
    spikes: Option<Vec<usize>>,
    /// Comma-separated measurement counts.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    /// Comma-separated law names [default: gaussian].
    #[arg(long, value_delimiter = ',')]
    law: Option<Vec<String>>,
    /// Trials (samples for smallball) per grid point.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    eta: f64,
    #[arg(long, default_value = "2")]
    p: NormKind,
    /// Comma-separated noise levels for the noise sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.001,0.002,0.004")]
    eta_grid: Vec<f64>,
    #[arg(long, default_value_t = 0.25)]
    alpha: f64,
    #[arg(long, default_value_t = 9)]
    z0_points: usize,
    /// Directions per z0 value.
    #[arg(long, default_value_t = 8)]
    directions: usize,
    /// Solver settings as JSON or `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// CSV output; the JSON sidecar goes next to it.
    #[arg(long)]
    out: PathBuf,
}

/// Ground-truth file written by `gen`.
#[derive(Serialize, Deserialize)]
struct Truth {
    n: usize,
    rank: usize,
    seed: u64,
    spikes: SpikeModel,
    z: ToeplitzVector,
}

#[derive(Serialize)]
struct RecoverOutput {
    #[serde(flatten)]
    report: RecoveryReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Certificate>,
}

enum Failure {
    Usage(String),
    NotConverged(String),
    CheckFailed(String),
}

impl From<toeprec::Error> for Failure {
    fn from(e: toeprec::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn parse_spike(s: &str) -> Result<Spike, String> {
    let (f, d) = s.split_once(':').ok_or_else(|| format!("expected frequency:amplitude, got `{s}`"))?;
    let frequency = f.trim().parse().map_err(|_| format!("bad frequency `{f}`"))?;
    let amplitude = d.trim().parse().map_err(|_| format!("bad amplitude `{d}`"))?;
    Ok(Spike { frequency, amplitude })
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn solver_config(path: Option<&Path>) -> Result<SolverConfig, Failure> {
    let cfg = match path {
        Some(p) => SolverConfig::parse(&read(p)?)?,
        None => SolverConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let spikes = if a.spikes.is_empty() {
        SpikeModel::random(a.random_spikes, a.n, &mut stream(a.seed))?
    } else {
        SpikeModel::new(a.spikes)?
    };
    let z = spike_toeplitz(&spikes, a.n)?;
    write_json(&a.out, &Truth { n: a.n, rank: spikes.rank(), seed: a.seed, spikes, z })
}

fn sense(a: SenseArgs) -> Result<(), Failure> {
    let truth: Truth = serde_json::from_str(&read(&a.truth)?)?;
    let law = builtin_law(&a.law)?;
    let set = MeasurementSet::sense_scaled(&truth.z, &law, a.m, a.eta, a.p, a.noise_scale, a.seed)?;
    write_json(&a.out, &set.with_materialized(!a.lazy))
}

fn recover(a: RecoverArgs) -> Result<(), Failure> {
    let set: MeasurementSet = serde_json::from_str(&read(&a.measurements)?)?;
    let cfg = solver_config(a.config.as_deref())?;
    let truth: Option<Truth> = a.truth.as_deref().map(|p| read(p).and_then(|t| Ok(serde_json::from_str(&t)?))).transpose()?;
    let (z, report) = recover_measurements(&set, &cfg)?;
    let certificate = match &truth {
        Some(t) => Some(certify(&z, &set.operator(), &set.b, set.eta, set.p, Some(&t.z))?),
        None => None,
    };
    let converged = report.converged;
    let iterations = report.iterations;
    write_json(&a.out, &RecoverOutput { report, certificate })?;
    if converged {
        Ok(())
    } else {
        Err(Failure::NotConverged(format!("solver stopped after {iterations} iterations without converging")))
    }
}

fn experiment(name: &str, a: ExperimentArgs) -> Result<(), Failure> {
    let mut params = ExperimentParams::default();
    let g = &mut params.grid;
    // Per-experiment defaults where the shared ones would be meaningless.
    match name {
        "specnorm" => {
            g.n_list = vec![64, 128, 256];
            g.m_list = vec![4, 16, 64];
            g.trials = 30;
        }
        "smallball" => {
            g.n_list = vec![16, 64];
            g.trials = 100_000;
        }
        "noise" => g.m_list = vec![64, 256],
        "descent" => {
            g.n_list = vec![32];
            g.spikes_list = vec![1, 2];
            g.trials = 1000;
        }
        _ => {}
    }
    if let Some(v) = a.n {
        g.n_list = v;
    }
    if let Some(v) = a.spikes {
        g.spikes_list = v;
    }
    if let Some(v) = a.m {
        g.m_list = v;
    }
    if let Some(v) = a.law {
        g.laws = v.iter().map(|l| builtin_law(l)).collect::<toeprec::Result<Vec<SubgaussianLaw>>>()?;
    }
    if let Some(t) = a.trials {
        g.trials = t;
    }
    g.base_seed = a.seed;
    g.eta = a.eta;
    g.p = a.p;
    g.solver = solver_config(a.config.as_deref())?;
    params.eta_grid = a.eta_grid;
    params.alpha = a.alpha;
    params.z0_points = a.z0_points;
    params.directions = a.directions;
    if params.grid.n_list.is_empty() || params.grid.m_list.is_empty() || params.grid.laws.is_empty() {
        return Err(Failure::Usage("n, m and law lists must be nonempty".into()));
    }

    let sidecar = sidecar_path(&a.out)?;
    let registry = ExperimentRegistry::builtin();
    let exp = registry.get(name)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads.max(1))
        .build()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let out = pool.install(|| exp.run(&params))?;
    out.table.save_csv(&a.out)?;
    out.sidecar(name, &params)?.save(&sidecar)?;
    for c in &out.checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    Ok(())
}

fn verify(quick: bool) -> Result<(), Failure> {
    let outcomes = CheckRegistry::builtin().run_all(quick);
    let mut stdout = std::io::stdout().lock();
    for c in &outcomes {
        let _ = writeln!(stdout, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = outcomes.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::CheckFailed(format!("failed checks: {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("ERROR: {}", e.to_string().trim_start_matches("error: ").trim_end());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Sense(a) => sense(a),
        Command::Recover(a) => recover(a),
        Command::Phase(a) => experiment("phase", a),
        Command::Specnorm(a) => experiment("specnorm", a),
        Command::Smallball(a) => experiment("smallball", a),
        Command::Noise(a) => experiment("noise", a),
        Command::Descent(a) => experiment("descent", a),
        Command::Verify { quick } => verify(quick),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("ERROR: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::NotConverged(msg)) => {
            eprintln!("ERROR: {msg}");
            ExitCode::from(EXIT_NOT_CONVERGED)
        }
        Err(Failure::CheckFailed(msg)) => {
            eprintln!("ERROR: {msg}");
            ExitCode::from(EXIT_CHECK_FAILED)
        }
    }
}
