//! Command line front end: ingestion, tuning, fitting, simulation, and
//! posterior summarization for joint change point analysis.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;
mod data;
mod errors;
mod out;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ccp_ppm::sampler::McmcConfig;
use ccp_ppm::Method;

use commands::probe::ProbeArgsResolved;
use commands::simulate::{ScenarioArg, SimulateArgsResolved};
use commands::summarize::SummarizeArgsResolved;
use config::{ChainsFormatConfig, RunConfig};
use errors::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "ccp-ppm",
    version,
    about = "Joint Bayesian change point detection across multiple time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct FitArgs {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// MCMC seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Burn-in sweeps override.
    #[arg(long)]
    burn: Option<usize>,
    /// Thinning stride override.
    #[arg(long)]
    thin: Option<usize>,
    /// Saved draw count override.
    #[arg(long)]
    save: Option<usize>,
    /// Metropolis proposal standard deviation override.
    #[arg(long)]
    rw_sd: Option<f64>,
    /// Draw file format override.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum FormatArg {
    Csv,
    Bin,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario preset.
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 100)]
    replicates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    burn: usize,
    #[arg(long, default_value_t = 10)]
    thin: usize,
    #[arg(long, default_value_t = 2_000)]
    save: usize,
    #[arg(long, default_value_t = 0.005)]
    rw_sd: f64,
    /// Read the scenario's block spreads as variances instead of
    /// standard deviations.
    #[arg(long)]
    sigma_as_variance: bool,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args)]
struct SummarizeArgs {
    /// A fit output directory.
    #[arg(long)]
    chains: PathBuf,
    /// Output directory (default: `<chains>/summary`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// False-positive (split) penalty of the partition loss.
    #[arg(long, default_value_t = 25.0)]
    fp_penalty: f64,
    /// False-negative (merge) penalty of the partition loss.
    #[arg(long, default_value_t = 1.0)]
    fn_penalty: f64,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Ground-truth partitions (JSON array, as written by `simulate`).
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, default_value_t = 3.0)]
    nu0: f64,
    /// Logit-scale location, one value per series.
    #[arg(long, num_args = 1.., allow_negative_numbers = true, required = true)]
    mu: Vec<f64>,
    /// Common logit-scale variance.
    #[arg(long)]
    var: f64,
    /// Common logit-scale correlation.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    corr: f64,
    /// Series length for the change-count moments.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Select all tuning parameters by empirical Bayes and emit them as
    /// JSON.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the correlated change point model.
    Fit(FitArgs),
    /// Fit the independent per-series baseline.
    FitIndep(FitArgs),
    /// Run a replicated simulation study on a built-in scenario.
    Simulate(SimulateArgs),
    /// Summarize a persisted fit.
    Summarize(SummarizeArgs),
    /// Exact prior properties of a compound-symmetric logit-t law.
    PriorProbe(ProbeArgs),
}

fn apply_fit_overrides(config: &mut RunConfig, args: &FitArgs) {
    if let Some(out) = &args.out {
        config.output.dir = Some(out.clone());
    }
    if let Some(seed) = args.seed {
        config.mcmc.seed = seed;
    }
    if let Some(burn) = args.burn {
        config.mcmc.n_burn = burn;
    }
    if let Some(thin) = args.thin {
        config.mcmc.n_thin = thin;
    }
    if let Some(save) = args.save {
        config.mcmc.n_save = save;
    }
    if let Some(rw_sd) = args.rw_sd {
        config.mcmc.rw_sd = rw_sd;
    }
    if let Some(format) = args.format {
        config.output.format = match format {
            FormatArg::Csv => ChainsFormatConfig::Csv,
            FormatArg::Bin => ChainsFormatConfig::Bin,
        };
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Tune { config, out } => commands::tune::run(&config, out),
        Command::Fit(args) => {
            let mut config = RunConfig::load(&args.config)?;
            apply_fit_overrides(&mut config, &args);
            commands::fit::run(&config, Method::Ccp)
        }
        Command::FitIndep(args) => {
            let mut config = RunConfig::load(&args.config)?;
            apply_fit_overrides(&mut config, &args);
            commands::fit::run(&config, Method::Indep)
        }
        Command::Simulate(args) => {
            let mcmc = McmcConfig {
                n_burn: args.burn,
                n_thin: args.thin,
                n_save: args.save,
                rw_sd: args.rw_sd,
                seed: 0,
            };
            mcmc.validate().map_err(CliError::config)?;
            commands::simulate::run(&SimulateArgsResolved {
                scenario: args.scenario,
                replicates: args.replicates,
                seed: args.seed,
                out_dir: args.out,
                mcmc,
                sigma_as_variance: args.sigma_as_variance,
                threshold: args.threshold,
            })
        }
        Command::Summarize(args) => {
            let out_dir = args
                .out
                .clone()
                .unwrap_or_else(|| args.chains.join("summary"));
            commands::summarize::run(&SummarizeArgsResolved {
                chains_dir: args.chains,
                out_dir,
                loss: ccp_ppm::LossConfig {
                    fp_penalty: args.fp_penalty,
                    fn_penalty: args.fn_penalty,
                },
                threshold: args.threshold,
                truth: args.truth,
            })
        }
        Command::PriorProbe(args) => commands::probe::run(&ProbeArgsResolved {
            nu0: args.nu0,
            mu: args.mu,
            variance: args.var,
            correlation: args.corr,
            n: args.n,
            out: args.out,
        }),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
