//! Command-line driver for environment sampling, exact survival curves,
//! tail estimation and self-verification.
//!
//! Every run is a pure function of its settings and seed: worker count
//! changes scheduling, never output bytes. Output files are assembled in
//! memory and moved into place whole, so readers never observe a partial
//! file. Exit codes: 0 success, 1 runtime or verification failure, 2
//! configuration error.

mod config;

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bpce::analysis::{self, XTransform};
use bpce::env::{fgn_covariance, sample_fgn, EnvPath, FgnSampler, FgnSpec, HurstParam};
use bpce::offspring::OffspringFamily;
use bpce::quenched;
use bpce::report::{self, TailReport};
use bpce::seeds::replica_rng;
use bpce::sim::{self, TailEstimate, TailMode};

use config::Settings;

#[derive(Parser)]
#[command(
    name = "bpce",
    version,
    about = "Critical branching processes in a correlated gaussian environment",
    propagate_version = true
)]
struct Cli {
    /// TOML settings file; command-line flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads for replicate loops; results are identical for any count
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a fractional gaussian noise environment into a binary dump
    SampleEnv(SampleEnvArgs),
    /// Exact conditional survival curve for one environment, as CSV
    SurvivalCurve(SurvivalCurveArgs),
    /// Tail of the extinction time, by exact survival averaged over environments
    TailExtinction(TailExtinctionArgs),
    /// Tail of the running maximum population, by simulation
    TailMax(PopulationTailArgs),
    /// Tail of the total progeny, by simulation
    TailTotal(PopulationTailArgs),
    /// Probability that the environment walk stays below a level
    Persistence(PersistenceArgs),
    /// Fast self-checks against closed-form values; exits 1 on failure
    Verify,
}

#[derive(Args)]
struct SampleEnvArgs {
    /// Hurst parameter of the noise
    #[arg(long)]
    hurst: Option<f64>,
    /// Number of increments to sample
    #[arg(long)]
    length: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Destination of the binary dump
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SurvivalCurveArgs {
    /// Read the environment from a dump instead of sampling one
    #[arg(long, conflicts_with_all = ["hurst", "length", "seed"])]
    env: Option<PathBuf>,
    #[arg(long)]
    hurst: Option<f64>,
    /// Length of the sampled environment; defaults to the horizon
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    family: Option<String>,
    /// Curve horizon; defaults to the full environment length
    #[arg(long)]
    horizon: Option<usize>,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    hurst: Option<f64>,
    /// Offspring family: geometric, poisson or binomial:<n_max>
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Independent environment replicates
    #[arg(long)]
    replicates: Option<u64>,
}

#[derive(Args)]
struct FitArgs {
    /// Fit window as inclusive threshold bounds, e.g. --window 32,4096
    #[arg(long, value_delimiter = ',', num_args = 1, value_name = "LO,HI")]
    window: Option<Vec<u64>>,
    /// Fit abscissa, log or loglog; defaults to the mode's natural choice
    #[arg(long)]
    transform: Option<String>,
    /// Skip the power-law fit
    #[arg(long)]
    no_fit: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the estimate as commented CSV
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the full report as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write two-column plot data
    #[arg(long)]
    dat: Option<PathBuf>,
    /// Write a self-contained SVG plot
    #[arg(long)]
    svg: Option<PathBuf>,
}

impl OutputArgs {
    fn none_given(&self) -> bool {
        self.csv.is_none() && self.json.is_none() && self.dat.is_none() && self.svg.is_none()
    }
}

#[derive(Args)]
struct TailExtinctionArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Survival horizons in generations, ascending, e.g. 16,32,64
    #[arg(long, value_delimiter = ',')]
    horizons: Option<Vec<u64>>,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PopulationTailArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Population thresholds, ascending, e.g. 16,32,64
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<u64>>,
    /// Trajectories simulated per environment
    #[arg(long)]
    traj_per_env: Option<u64>,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PersistenceArgs {
    #[arg(long)]
    hurst: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<u64>,
    /// Walk lengths, ascending, e.g. 64,128,256
    #[arg(long, value_delimiter = ',')]
    lengths: Option<Vec<u64>>,
    /// Barrier the running maximum must stay at or below
    #[arg(long, allow_hyphen_values = true)]
    level: Option<f64>,
    #[command(flatten)]
    fit: FitArgs,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failures split by exit code: configuration problems exit 2, runtime and
/// verification problems exit 1.
enum Failure {
    Config(String),
    Runtime(String),
}

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(Failure::Config("workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(runtime_err)?;
    }

    let mut settings = Settings::default();
    if let Some(path) = &cli.config {
        settings.apply_file(path).map_err(Failure::Config)?;
    }

    match cli.command {
        Command::SampleEnv(args) => run_sample_env(&settings, args),
        Command::SurvivalCurve(args) => run_survival_curve(&settings, args),
        Command::TailExtinction(args) => run_tail_extinction(&settings, args),
        Command::TailMax(args) => run_population_tail(&settings, TailMode::MaxPopulation, args),
        Command::TailTotal(args) => run_population_tail(&settings, TailMode::TotalPopulation, args),
        Command::Persistence(args) => run_persistence(&settings, args),
        Command::Verify => run_verify(),
    }
}

fn parse_hurst(v: f64) -> Result<HurstParam<f64>, Failure> {
    HurstParam::new(v).map_err(config_err)
}

fn parse_family(s: &str) -> Result<OffspringFamily, Failure> {
    s.parse::<OffspringFamily>().map_err(config_err)
}

fn parse_transform(s: &str) -> Result<XTransform, Failure> {
    match s {
        "log" => Ok(XTransform::Log),
        "loglog" => Ok(XTransform::LogLog),
        other => Err(Failure::Config(format!(
            "unknown transform {other:?} (expected \"log\" or \"loglog\")"
        ))),
    }
}

fn to_usize_grid(values: &[u64], what: &str) -> Result<Vec<usize>, Failure> {
    values
        .iter()
        .map(|v| {
            usize::try_from(*v).map_err(|_| Failure::Config(format!("{what} value {v} too large")))
        })
        .collect()
}

/// Writes each output file whole via a temporary sibling and a rename, so a
/// partially written file never sits at the destination.
fn finalize(outputs: Vec<(PathBuf, Vec<u8>)>) -> Result<Vec<PathBuf>, Failure> {
    let mut written = Vec::with_capacity(outputs.len());
    for (path, bytes) in outputs {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir)
            .map_err(|e| runtime_err(format!("cannot stage output in {}: {e}", dir.display())))?;
        tmp.write_all(&bytes).map_err(runtime_err)?;
        tmp.persist(&path)
            .map_err(|e| runtime_err(format!("cannot write {}: {}", path.display(), e.error)))?;
        written.push(path);
    }
    Ok(written)
}

fn run_sample_env(settings: &Settings, args: SampleEnvArgs) -> Result<(), Failure> {
    let hurst = parse_hurst(args.hurst.unwrap_or(settings.hurst))?;
    let seed = args.seed.unwrap_or(settings.seed);
    let env = sample_fgn(&FgnSpec { hurst, length: args.length, seed }).map_err(config_err)?;
    let mut bytes = Vec::new();
    env.write_binary(&mut bytes).map_err(runtime_err)?;
    finalize(vec![(args.out.clone(), bytes)])?;
    println!(
        "wrote environment: length {} hurst {} seed {} -> {}",
        args.length,
        hurst.value(),
        seed,
        args.out.display()
    );
    Ok(())
}

fn run_survival_curve(settings: &Settings, args: SurvivalCurveArgs) -> Result<(), Failure> {
    let family = parse_family(args.family.as_deref().unwrap_or(&settings.family))?;
    let mut meta = BTreeMap::new();
    meta.insert("family".to_string(), family.to_string());

    let env: EnvPath<f64> = match &args.env {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| config_err(format!("cannot open {}: {e}", path.display())))?;
            meta.insert("source".to_string(), path.display().to_string());
            EnvPath::read_binary(&mut BufReader::new(file))
                .map_err(|e| config_err(format!("bad dump {}: {e}", path.display())))?
        }
        None => {
            let hurst = parse_hurst(args.hurst.unwrap_or(settings.hurst))?;
            let seed = args.seed.unwrap_or(settings.seed);
            let length = match (args.length, args.horizon) {
                (Some(n), _) => n,
                (None, Some(n)) => n,
                (None, None) => 4096,
            };
            meta.insert("hurst".to_string(), hurst.value().to_string());
            meta.insert("seed".to_string(), seed.to_string());
            sample_fgn(&FgnSpec { hurst, length, seed }).map_err(config_err)?
        }
    };
    let horizon = args.horizon.unwrap_or(env.len());
    let curve = quenched::survival_curve(&env, family, horizon).map_err(config_err)?;

    let mut bytes = Vec::new();
    for (k, v) in &meta {
        writeln!(bytes, "# {k}: {v}").map_err(runtime_err)?;
    }
    writeln!(bytes, "k,q_k").map_err(runtime_err)?;
    for (k, q) in curve.q().iter().enumerate() {
        writeln!(bytes, "{k},{q}").map_err(runtime_err)?;
    }

    match &args.out {
        Some(path) => {
            finalize(vec![(path.clone(), bytes)])?;
            println!("wrote survival curve: horizon {} -> {}", horizon, path.display());
        }
        None => std::io::stdout().write_all(&bytes).map_err(runtime_err)?,
    }
    Ok(())
}

fn run_tail_extinction(settings: &Settings, args: TailExtinctionArgs) -> Result<(), Failure> {
    let hurst = parse_hurst(args.common.hurst.unwrap_or(settings.hurst))?;
    let family = parse_family(args.common.family.as_deref().unwrap_or(&settings.family))?;
    let seed = args.common.seed.unwrap_or(settings.seed);
    let replicates = args.common.replicates.unwrap_or(settings.env_replicates);
    let horizons =
        to_usize_grid(args.horizons.as_deref().unwrap_or(&settings.horizons), "horizon")?;

    let est = sim::estimate_tail_extinction(hurst, family, &horizons, replicates, seed)
        .map_err(config_err)?;

    let mut echo = settings_echo(hurst, Some(family), seed);
    echo.insert("horizons".to_string(), grid_string(&est.thresholds));
    emit(settings, &args.fit, &args.output, est, hurst, echo)
}

fn run_population_tail(
    settings: &Settings,
    mode: TailMode,
    args: PopulationTailArgs,
) -> Result<(), Failure> {
    let hurst = parse_hurst(args.common.hurst.unwrap_or(settings.hurst))?;
    let family = parse_family(args.common.family.as_deref().unwrap_or(&settings.family))?;
    let seed = args.common.seed.unwrap_or(settings.seed);
    let replicates = args.common.replicates.unwrap_or(settings.env_replicates);
    let traj_per_env = args.traj_per_env.unwrap_or(settings.traj_per_env);
    let thresholds = args.thresholds.as_deref().unwrap_or(&settings.thresholds);

    let est = match mode {
        TailMode::MaxPopulation => {
            sim::estimate_tail_max(hurst, family, thresholds, replicates, traj_per_env, seed)
        }
        TailMode::TotalPopulation => {
            sim::estimate_tail_total(hurst, family, thresholds, replicates, traj_per_env, seed)
        }
        _ => unreachable!("population modes only"),
    }
    .map_err(config_err)?;

    let mut echo = settings_echo(hurst, Some(family), seed);
    echo.insert("traj_per_env".to_string(), traj_per_env.to_string());
    emit(settings, &args.fit, &args.output, est, hurst, echo)
}

fn run_persistence(settings: &Settings, args: PersistenceArgs) -> Result<(), Failure> {
    let hurst = parse_hurst(args.hurst.unwrap_or(settings.hurst))?;
    let seed = args.seed.unwrap_or(settings.seed);
    let replicates = args.replicates.unwrap_or(settings.env_replicates);
    let level = args.level.unwrap_or(settings.level);
    let lengths = to_usize_grid(args.lengths.as_deref().unwrap_or(&settings.lengths), "length")?;

    let est = sim::estimate_persistence(hurst, &lengths, level, replicates, seed)
        .map_err(config_err)?;

    let mut echo = settings_echo(hurst, None, seed);
    echo.insert("level".to_string(), level.to_string());
    emit(settings, &args.fit, &args.output, est, hurst, echo)
}

fn settings_echo(
    hurst: HurstParam<f64>,
    family: Option<OffspringFamily>,
    seed: u64,
) -> BTreeMap<String, String> {
    let mut echo = BTreeMap::new();
    echo.insert("tool".to_string(), format!("bpce {}", env!("CARGO_PKG_VERSION")));
    echo.insert("hurst".to_string(), hurst.value().to_string());
    echo.insert("seed".to_string(), seed.to_string());
    if let Some(f) = family {
        echo.insert("family".to_string(), f.to_string());
    }
    echo
}

fn grid_string(values: &[u64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Fits, assembles every requested output in memory, then writes and prints
/// a summary. With no output flags the CSV goes to stdout instead.
fn emit(
    settings: &Settings,
    fit_args: &FitArgs,
    output: &OutputArgs,
    est: TailEstimate,
    hurst: HurstParam<f64>,
    echo: BTreeMap<String, String>,
) -> Result<(), Failure> {
    let transform = match fit_args.transform.as_deref().or(settings.transform.as_deref()) {
        Some(s) => parse_transform(s)?,
        None => analysis::default_transform(est.mode),
    };
    let window = match &fit_args.window {
        Some(w) => {
            if w.len() != 2 || w[0] > w[1] {
                return Err(Failure::Config(format!(
                    "window must be LO,HI with LO <= HI, got {w:?}"
                )));
            }
            Some((w[0], w[1]))
        }
        None => settings.window,
    };
    // a fit the user explicitly asked for must not fail quietly
    let explicit_fit =
        fit_args.window.is_some() || fit_args.transform.is_some() || settings.window.is_some();

    let fit = if fit_args.no_fit {
        None
    } else {
        match analysis::fit_power_law(&est, transform, window) {
            Ok(f) => Some(f),
            Err(e) if explicit_fit => return Err(config_err(e)),
            Err(e) => {
                eprintln!("note: fit skipped: {e}");
                None
            }
        }
    };
    let expected = analysis::theoretical_exponents(hurst).expected_slope(est.mode);

    if output.none_given() {
        let mut bytes = Vec::new();
        report::write_csv(&mut bytes, &est, &echo).map_err(runtime_err)?;
        std::io::stdout().write_all(&bytes).map_err(runtime_err)?;
        return Ok(());
    }

    let mut outputs: Vec<(PathBuf, Vec<u8>)> = Vec::new();
    if let Some(path) = &output.csv {
        let mut bytes = Vec::new();
        report::write_csv(&mut bytes, &est, &echo).map_err(runtime_err)?;
        outputs.push((path.clone(), bytes));
    }
    if let Some(path) = &output.json {
        let mut report = TailReport::new(&est);
        report.settings = echo.clone();
        report.transform = Some(transform);
        report.fit = fit;
        report.expected_slope = Some(expected);
        let mut bytes = Vec::new();
        report::write_json(&mut bytes, &report).map_err(runtime_err)?;
        outputs.push((path.clone(), bytes));
    }
    if let Some(path) = &output.dat {
        let mut bytes = Vec::new();
        report::write_plot_data(&mut bytes, &est).map_err(runtime_err)?;
        outputs.push((path.clone(), bytes));
    }
    if let Some(path) = &output.svg {
        let mut bytes = Vec::new();
        report::write_svg_plot(&mut bytes, &est, transform, fit.as_ref()).map_err(runtime_err)?;
        outputs.push((path.clone(), bytes));
    }
    let written = finalize(outputs)?;

    println!(
        "{} tail: {} thresholds, {} replicates x {} (seed {})",
        est.mode,
        est.len(),
        est.replicates,
        est.samples_per_replicate,
        echo.get("seed").map(String::as_str).unwrap_or("?")
    );
    for j in 0..est.len() {
        println!(
            "  n={:<8} p={:<12.6e} se={:<10.3e} censored={}",
            est.thresholds[j], est.p_hat[j], est.std_err[j], est.n_censored[j]
        );
    }
    if let Some(fit) = &fit {
        println!(
            "  fit over [{}, {}]: slope {:.4} +/- {:.4}, expected {:.4}, r^2 {:.4}",
            fit.window.0, fit.window.1, fit.slope, fit.slope_std_err, expected, fit.r_squared
        );
    }
    for path in &written {
        println!("  wrote {}", path.display());
    }
    Ok(())
}

/// Quick closed-form checks covering each numeric subsystem. Prints one
/// line per check.
fn run_verify() -> Result<(), Failure> {
    let checks: Vec<(&str, Result<(), String>)> = vec![
        ("harmonic survival curve", verify_harmonic_curve()),
        ("matrix composition matches backward pass", verify_matrix_route()),
        ("survival decomposition identity", verify_decomposition()),
        ("noise covariance at lag one", verify_fgn_covariance()),
        ("white-noise persistence ballot numbers", verify_ballot()),
        ("aggregate offspring moments", verify_aggregate_moments()),
    ];
    let mut failed = 0;
    for (name, outcome) in &checks {
        match outcome {
            Ok(()) => println!("ok   {name}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed == 0 {
        println!("verify: {} checks passed", checks.len());
        Ok(())
    } else {
        Err(Failure::Runtime(format!(
            "verify: {failed} of {} checks failed",
            checks.len()
        )))
    }
}

fn verify_harmonic_curve() -> Result<(), String> {
    let n = 2000;
    let env = EnvPath::from_increments(vec![0.0f64; n]);
    let curve = quenched::survival_curve(&env, OffspringFamily::Geometric, n)
        .map_err(|e| e.to_string())?;
    for (k, q) in curve.q().iter().enumerate() {
        let expect = 1.0 / (k as f64 + 1.0);
        if (q - expect).abs() > 1e-12 * expect {
            return Err(format!("q[{k}] = {q}, expected {expect}"));
        }
    }
    Ok(())
}

fn verify_matrix_route() -> Result<(), String> {
    let hurst = HurstParam::new(0.7).unwrap();
    for seed in 0..20 {
        let env = sample_fgn(&FgnSpec { hurst, length: 80, seed: 3000 + seed })
            .map_err(|e| e.to_string())?;
        let direct: f64 = quenched::survival_at(&env, OffspringFamily::Geometric, 80)
            .map_err(|e| e.to_string())?;
        let matrix =
            quenched::mobius_compose_geometric(&env, 80).map_err(|e| e.to_string())?;
        if (matrix - direct).abs() > 1e-12 * direct {
            return Err(format!("seed {seed}: {matrix} vs {direct}"));
        }
    }
    Ok(())
}

fn verify_decomposition() -> Result<(), String> {
    let hurst = HurstParam::new(0.7).unwrap();
    let families = [
        OffspringFamily::Geometric,
        OffspringFamily::Poisson,
        OffspringFamily::Binomial { n_max: 1000 },
    ];
    for seed in 0..20 {
        let env = sample_fgn(&FgnSpec { hurst, length: 50, seed: 4000 + seed })
            .map_err(|e| e.to_string())?;
        for family in families {
            let d = match quenched::gk_decompose(&env, family, 50) {
                Ok(d) => d,
                Err(bpce::Error::EnvOutOfDomain { .. }) => continue,
                Err(e) => return Err(e.to_string()),
            };
            let q: f64 = quenched::survival_at(&env, family, 50).map_err(|e| e.to_string())?;
            let recip = 1.0 / q;
            if (d.total - recip).abs() > 1e-9 * recip {
                return Err(format!("{family} seed {seed}: {} vs {recip}", d.total));
            }
        }
    }
    Ok(())
}

fn verify_fgn_covariance() -> Result<(), String> {
    let hurst = HurstParam::new(0.7).unwrap();
    let n = 1024;
    let sampler = FgnSampler::new(hurst, n).map_err(|e| e.to_string())?;
    let reps = 300;
    let mut stats = Vec::with_capacity(reps);
    for r in 0..reps {
        let mut rng = replica_rng(5000, r as u64);
        let path = sampler.sample(&mut rng);
        let x = path.x();
        let lag1 =
            x.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / (n as f64 - 1.0);
        stats.push(lag1);
    }
    let mean = stats.iter().sum::<f64>() / reps as f64;
    let var = stats.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (reps as f64 - 1.0);
    let se = (var / reps as f64).sqrt();
    let expect = fgn_covariance(1, hurst);
    if (mean - expect).abs() > 5.0 * se {
        return Err(format!("lag-1 covariance {mean} vs {expect} (se {se})"));
    }
    Ok(())
}

fn verify_ballot() -> Result<(), String> {
    let hurst = HurstParam::new(0.5).unwrap();
    let est = sim::estimate_persistence(hurst, &[1, 2, 3, 4], 0.0, 20_000, 6000)
        .map_err(|e| e.to_string())?;
    let exact = [0.5, 0.375, 0.3125, 0.2734375];
    for j in 0..4 {
        let se = est.std_err[j].max(1e-9);
        if (est.p_hat[j] - exact[j]).abs() > 5.0 * se {
            return Err(format!(
                "n={}: {} vs {} (se {se})",
                est.thresholds[j], est.p_hat[j], exact[j]
            ));
        }
    }
    Ok(())
}

fn verify_aggregate_moments() -> Result<(), String> {
    let law = OffspringFamily::Geometric.law(1.3f64).map_err(|e| e.to_string())?;
    let z = 7u64;
    let draws = 20_000;
    let mut rng = replica_rng(7000, 0);
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for _ in 0..draws {
        let v = law.sample_aggregate(z, &mut rng) as f64;
        sum += v;
        sumsq += v * v;
    }
    let mean = sum / draws as f64;
    let var = sumsq / draws as f64 - mean * mean;
    let expect_mean = z as f64 * 1.3;
    let expect_var = z as f64 * (1.3 * 1.3 + 1.3);
    let se = (expect_var / draws as f64).sqrt();
    if (mean - expect_mean).abs() > 5.0 * se {
        return Err(format!("aggregate mean {mean} vs {expect_mean}"));
    }
    if (var - expect_var).abs() > 0.1 * expect_var {
        return Err(format!("aggregate variance {var} vs {expect_var}"));
    }
    Ok(())
}
