use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rfi_cli::commands;
use rfi_cli::config::{load_config, validate_config, DataSource, SamplerSetting};
use rfi_cli::runner::run_experiment;
use rfi_cli::svg::set_label;
use rfi_cli::CliError;

#[derive(Parser)]
#[command(name = "rfi", version, about = "Relative feature importance experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config (a path, or `experiment_a` / `experiment_b`).
    Run {
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replications: Option<usize>,
        /// Number of simulated rows, for graph-backed data.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        sampler: Option<SamplerArg>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for concurrent jobs (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Check a config and list every problem found.
    Validate { config: String },
    /// Sample rows from an SCM graph file or bundled graph to CSV.
    Simulate {
        graph: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit an OLS model on a CSV file and save it as TOML.
    Fit {
        csv: PathBuf,
        #[arg(long)]
        target: String,
        /// Comma-separated feature names.
        #[arg(long, value_delimiter = ',', required = true)]
        features: Vec<String>,
        /// 0/1 column selecting training rows (0 = train).
        #[arg(long)]
        split_column: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SamplerArg {
    Gaussian,
    Knockoff,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            replications,
            n,
            sampler,
            out,
            jobs,
        } => {
            let (mut cfg, base) = load_config(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            if let Some(rows) = n {
                if let DataSource::Builtin { n, .. } | DataSource::Graph { n, .. } = &mut cfg.data {
                    *n = rows;
                }
            }
            if let Some(s) = sampler {
                cfg.sampler.kind = match s {
                    SamplerArg::Gaussian => SamplerSetting::Gaussian,
                    SamplerArg::Knockoff => SamplerSetting::Knockoff,
                };
            }
            if let Some(o) = out {
                cfg.output_dir = std::env::current_dir().map_err(CliError::from)?.join(o);
            }
            let output = run_experiment(&cfg, &base, jobs)?;
            println!("{:<10} {:<22} {:>12} {:>10} {:>10}", "feature", "G", "estimate", "se", "p");
            for r in &output.records {
                println!(
                    "{:<10} {:<22} {:>12.5} {:>10.5} {:>10.3e}",
                    r.feature,
                    set_label(&r.given),
                    r.estimate,
                    r.se,
                    r.p_value
                );
            }
            println!("wrote {}", output.output_dir.display());
            Ok(())
        }
        Command::Validate { config } => {
            let diagnostics = validate_config(&config)?;
            if diagnostics.is_empty() {
                println!("{config}: ok");
                Ok(())
            } else {
                Err(CliError::Config(diagnostics))
            }
        }
        Command::Simulate { graph, n, seed, out } => {
            let t = commands::simulate(&graph, n, seed, &out)?;
            println!("wrote {} rows to {}", t.n_rows(), out.display());
            Ok(())
        }
        Command::Fit {
            csv,
            target,
            features,
            split_column,
            out,
        } => {
            let m = commands::fit(&csv, &target, &features, split_column.as_deref(), &out)?;
            for (f, b) in m.feature_order.iter().zip(&m.coefficients) {
                println!("{f:<10} {b:>12.6}");
            }
            println!("{:<10} {:>12.6}", "intercept", m.intercept);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
