use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covshrink_cli::commands::{cmd_chain, cmd_estimate, cmd_study};
use covshrink_cli::{CliError, EffectiveConfig, PartialConfig};

/// Bayesian shrinkage estimation of covariance matrices.
///
/// Exit codes: 0 success, 2 configuration or data error, 3 I/O error,
/// 4 sampler failure.
#[derive(Parser)]
#[command(name = "covshrink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the risk simulation and write the risk table as CSV.
    Study(StudyArgs),
    /// Estimate a covariance matrix from a data file (one observation per
    /// row, no header, zero mean assumed).
    Estimate(EstimateArgs),
    /// Dump the per-iteration chain trace for a data file.
    Chain(ChainArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; a previous run's .meta.toml also works.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    /// Exponent of the prior on the degrees of freedom (Model 1 and 2).
    #[arg(long)]
    delta: Option<u32>,
    /// Upper bound on the degrees of freedom for the D&K model.
    #[arg(long)]
    dk_bound: Option<f64>,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads; defaults to the number of processors.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    replications: Option<usize>,
    /// Sample sizes, comma separated.
    #[arg(long = "n", value_delimiter = ',')]
    n_values: Option<Vec<usize>>,
    /// True matrices among A, B, C, B1, B2, C1, C2, comma separated.
    #[arg(long, value_delimiter = ',')]
    matrices: Option<Vec<String>>,
    /// Also write per-replication losses to this file.
    #[arg(long)]
    raw: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// model1, model2 or dk.
    #[arg(long)]
    model: Option<String>,
    /// l1 (Stein) or l2 (Frobenius).
    #[arg(long)]
    loss: Option<String>,
    data: PathBuf,
}

#[derive(Args)]
struct ChainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    model: Option<String>,
    data: PathBuf,
}

impl CommonArgs {
    fn overrides(&self) -> PartialConfig {
        PartialConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            seed: self.seed,
            delta: self.delta,
            dk_bound: self.dk_bound,
            output: self.output.clone(),
            ..Default::default()
        }
    }

    fn resolve(&self, extra: PartialConfig, default_output: &str) -> Result<EffectiveConfig, CliError> {
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(CliError::config("threads: must be positive"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::config(format!("threads: {e}")))?;
        }
        let file = match &self.config {
            Some(path) => PartialConfig::load(path)?,
            None => PartialConfig::default(),
        };
        let flags = self.overrides().overridden_by(extra);
        EffectiveConfig::resolve(file.overridden_by(flags), default_output)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Study(a) => {
            let extra = PartialConfig {
                replications: a.replications,
                n_values: a.n_values.clone(),
                matrices: a.matrices.clone(),
                ..Default::default()
            };
            let cfg = a.common.resolve(extra, "risks.csv")?;
            cmd_study(&cfg, a.raw.as_deref())
        }
        Command::Estimate(a) => {
            let extra = PartialConfig {
                model: a.model.clone(),
                loss: a.loss.clone(),
                ..Default::default()
            };
            let cfg = a.common.resolve(extra, "estimate.csv")?;
            cmd_estimate(&cfg, &a.data)
        }
        Command::Chain(a) => {
            let extra = PartialConfig {
                model: a.model.clone(),
                ..Default::default()
            };
            let cfg = a.common.resolve(extra, "trace.csv")?;
            cmd_chain(&cfg, &a.data)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("covshrink: {e}");
            e.exit_code()
        }
    }
}
