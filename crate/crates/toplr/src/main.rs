use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;
use toplr::commands::{self, parse_class};
use toplr::config::{self, RawConfig};
use toplr::{data, runner, CliError, CliResult};

/// Likelihood-ratio tests on the k largest order statistics of light-tailed
/// samples.
#[derive(Parser)]
#[command(name = "toplr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test γ₀ against γ₀ + t(k, u) on a one-column data file.
    Test(TestArgs),
    /// Run a Monte Carlo verification experiment.
    Experiment(ExperimentArgs),
    /// Print the asymptotic quantities at one design point.
    Inspect(InspectArgs),
    /// Numerical diagnostics of the regularity conditions.
    Regularity(RegularityArgs),
}

#[derive(Args)]
struct KArgs {
    #[arg(long)]
    k: Option<u64>,
    /// Rate exponent; `k = (ln(n/k))^ε` for class a, `k = n^ε` for class b.
    #[arg(long, conflicts_with = "k")]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct TestArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    family: String,
    #[arg(long)]
    gamma0: f64,
    /// Regularity class `a` or `b`; defaults to the family's own.
    #[arg(long)]
    class: Option<String>,
    #[command(flatten)]
    k: KArgs,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// `key = value` design file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Bundled design, e.g. `theorem1-weibull`.
    #[arg(long)]
    preset: Option<String>,
    /// t1, t2 or l3.
    #[arg(long)]
    theorem: Option<String>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    n: Option<u64>,
    #[arg(long)]
    k: Option<u64>,
    #[arg(long, conflicts_with = "k")]
    epsilon: Option<f64>,
    /// `log` or `power`.
    #[arg(long)]
    rate: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    u: Option<f64>,
    /// Comma-separated levels.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Defaults to all cores; the output does not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated `u` values for a size/power table.
    #[arg(long, allow_hyphen_values = true)]
    u_grid: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write replication-level statistics here.
    #[arg(long)]
    raw_csv: Option<PathBuf>,
    /// Include wall-clock runtime in the summary.
    #[arg(long)]
    timing: bool,
    /// No progress on stderr.
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    family: String,
    #[arg(long, alias = "gamma")]
    gamma0: f64,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    n: u64,
    #[command(flatten)]
    k: KArgs,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    u: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RegularityArgs {
    #[arg(long)]
    family: String,
    #[arg(long, alias = "gamma")]
    gamma0: f64,
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    grid_start: Option<f64>,
    #[arg(long)]
    grid_ratio: Option<f64>,
    #[arg(long)]
    grid_count: Option<usize>,
    /// `ε` in A1 and B1.
    #[arg(long)]
    epsilon: Option<f64>,
    /// `δ` in B2.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn class(s: &Option<String>) -> CliResult<Option<toplr_core::RegularityClass>> {
    s.as_deref().map(parse_class).transpose()
}

fn run_test(a: TestArgs) -> CliResult<()> {
    let values = data::read_column(&a.data)?;
    let report = commands::test_data(
        &values,
        &a.family,
        class(&a.class)?,
        a.gamma0,
        (a.k.k, a.k.epsilon),
        a.u,
        a.alpha,
    )?;
    commands::emit(&commands::to_json(&report), a.out.as_deref())
}

fn run_experiment(a: ExperimentArgs) -> CliResult<()> {
    let mut raw = match (&a.config, &a.preset) {
        (Some(path), _) => RawConfig::read(path)?,
        (None, Some(name)) => RawConfig::parse(config::preset(name)?)?,
        (None, None) => RawConfig::default(),
    };
    if a.k.is_some() || a.epsilon.is_some() {
        raw.remove("k");
        raw.remove("epsilon");
    }
    let overrides: [(&str, Option<String>); 14] = [
        ("theorem", a.theorem.clone()),
        ("family", a.family.clone()),
        ("gamma0", a.gamma0.map(|v| v.to_string())),
        ("n", a.n.map(|v| v.to_string())),
        ("k", a.k.map(|v| v.to_string())),
        ("epsilon", a.epsilon.map(|v| v.to_string())),
        ("rate", a.rate.clone()),
        ("u", a.u.map(|v| v.to_string())),
        ("alpha", a.alpha.clone()),
        ("seed", a.seed.map(|v| v.to_string())),
        ("replications", a.replications.map(|v| v.to_string())),
        ("workers", a.workers.map(|v| v.to_string())),
        ("u_grid", a.u_grid.clone()),
        ("out", a.out.as_ref().map(|p| p.display().to_string())),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            raw.set(key, v)?;
        }
    }
    if let Some(p) = &a.raw_csv {
        raw.set("raw_csv", p.display())?;
    }
    let s = config::settings(&raw)?;
    let workers = s.workers.unwrap_or_else(runner::default_workers);
    let progress = !a.quiet;
    if progress {
        eprintln!(
            "{:?} {} gamma0={} n={} k={} R={} workers={workers}",
            s.design.theorem,
            s.design.family,
            s.design.gamma0,
            s.design.n,
            s.design.resolve_k()?,
            s.design.replications
        );
    }
    let start = Instant::now();
    let (mut summary, reps) = runner::run_experiment(&s.design, workers, progress)?;
    let table = match &s.u_grid {
        Some(grid) => Some(runner::run_size_power(&s.design, grid, workers, progress)?),
        None => None,
    };
    if a.timing {
        summary.runtime_seconds = Some(start.elapsed().as_secs_f64());
    }
    if let Some(path) = &s.raw_csv {
        commands::emit(&commands::replicates_csv(&reps), Some(path))?;
    }
    let mut doc = serde_json::to_value(&summary).expect("serializable");
    if let (Some(table), Value::Object(map)) = (table, &mut doc) {
        map.insert("size_power".into(), serde_json::to_value(table).expect("serializable"));
    }
    commands::emit(&commands::to_json(&doc), s.out.as_deref())
}

fn run_inspect(a: InspectArgs) -> CliResult<()> {
    let v = commands::inspect(&a.family, class(&a.class)?, a.gamma0, a.n, (a.k.k, a.k.epsilon), a.u)?;
    commands::emit(&commands::to_json(&v), a.out.as_deref())
}

fn run_regularity(a: RegularityArgs) -> CliResult<()> {
    let r = commands::regularity(
        &a.family,
        a.gamma0,
        class(&a.class)?,
        (a.grid_start, a.grid_ratio, a.grid_count),
        a.epsilon,
        a.delta,
    )?;
    commands::emit(&commands::to_json(&r), a.out.as_deref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Test(a) => run_test(a),
        Command::Experiment(a) => run_experiment(a),
        Command::Inspect(a) => run_inspect(a),
        Command::Regularity(a) => run_regularity(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match &e {
                CliError::Core(c) => c.kind(),
                _ => "InputError",
            };
            eprintln!("error [{kind}]: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
