mod bench;
mod commands;
mod data;
mod error;
mod run_config;
mod verify;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynkde::harness::Generator;
use dynkde::KernelKind;

use crate::bench::BenchOptions;
use crate::commands::QueryOptions;
use crate::error::{CliError, CliResult};
use crate::run_config::RunConfig;
use crate::verify::VerifyOptions;

/// Dynamic kernel density estimation with LSH-backed sublinear updates and queries.
#[derive(Debug, Parser)]
#[command(name = "dynkde", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags override the config file, which overrides the defaults.
#[derive(Debug, Args)]
struct GlobalArgs {
    /// Flat key=value config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Density floor the structure is sized for.
    #[arg(long = "f-kde", global = true, conflicts_with = "auto_f_kde")]
    f_kde: Option<f64>,
    /// Set f_kde to the largest exact density over the queries in this CSV.
    #[arg(long = "auto-f-kde", global = true, value_name = "PROBES_CSV")]
    auto_f_kde: Option<PathBuf>,
    /// gaussian or exponential.
    #[arg(long, global = true)]
    kernel: Option<KernelKind>,
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    /// Output path (snapshot for build/update, CSV otherwise).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a structure from a point CSV and save a snapshot.
    Build { data: PathBuf },
    /// Answer the queries in a CSV against a snapshot.
    Query {
        snapshot: PathBuf,
        queries: PathBuf,
        /// Median over an ensemble of independently seeded structures.
        #[arg(long)]
        robust: bool,
        /// Ensemble size; by default derived from dimension, epsilon, tau and delta.
        #[arg(long, requires = "robust")]
        ensemble_size: Option<usize>,
        /// Add exact density and relative error columns.
        #[arg(long)]
        with_oracle: bool,
    },
    /// Apply `index, coordinates...` replacements to a snapshot.
    Update { snapshot: PathBuf, updates: PathBuf },
    /// Time build, update, query and rebuild on generated datasets.
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "1000,10000")]
        sizes: Vec<usize>,
        #[arg(long, default_value = "two-clusters")]
        generator: Generator,
        #[arg(long, default_value_t = 8)]
        dim: usize,
        #[arg(long, default_value_t = 11)]
        repeats: usize,
        #[arg(long, default_value_t = 20)]
        queries: usize,
    },
    /// Run the statistical verification suite.
    Verify {
        /// 50 trials per statistical test instead of 200.
        #[arg(long)]
        quick: bool,
        /// Point CSV to verify on instead of the generated two-cluster set.
        #[arg(long, value_name = "CSV")]
        data: Option<PathBuf>,
    },
}

fn resolve_config(g: &GlobalArgs) -> CliResult<RunConfig> {
    let mut cfg = match &g.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(e) = g.epsilon {
        cfg.epsilon = e;
    }
    if let Some(f) = g.f_kde {
        cfg.f_kde = f;
    }
    if let Some(k) = g.kernel {
        cfg.kernel = k;
    }
    if let Some(bw) = g.bandwidth {
        cfg.bandwidth = Some(bw);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli, stdout: &mut dyn Write) -> CliResult<()> {
    let cfg = resolve_config(&cli.global)?;
    let out = cli.global.out.as_deref();
    if cli.global.auto_f_kde.is_some() && !matches!(cli.command, Command::Build { .. }) {
        return Err(CliError::Usage("--auto-f-kde only applies to build".into()));
    }
    match cli.command {
        Command::Build { data } => {
            let out = out.ok_or_else(|| CliError::Usage("build needs --out <snapshot>".into()))?;
            commands::build(&cfg, &data, cli.global.auto_f_kde.as_deref(), out, stdout)
        }
        Command::Query { snapshot, queries, robust, ensemble_size, with_oracle } => {
            let opts = QueryOptions { robust, ensemble_size, with_oracle };
            commands::query(&cfg, &snapshot, &queries, opts, out, stdout)
        }
        Command::Update { snapshot, updates } => commands::update(&snapshot, &updates, out, stdout),
        Command::Bench { sizes, generator, dim, repeats, queries } => {
            let opts = BenchOptions { sizes, generator, dim, repeats, queries };
            bench::bench(&cfg, &opts, out, stdout)
        }
        Command::Verify { quick, data } => verify::verify(&cfg, &VerifyOptions { quick, data }, out, stdout),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
