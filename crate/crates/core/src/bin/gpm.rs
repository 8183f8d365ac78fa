use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpm_core::experiment::{
    list_experiments, run_experiment, validate_config_with_overrides, ExperimentConfig,
    ExperimentError,
};

/// Measurement-based Fock and Dicke state preparation experiments.
#[derive(Parser)]
#[command(name = "gpm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config, writing CSV data and a JSON manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads for sweep points (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Directory for outputs; overrides the directory part of output_path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parameter override `key=value`; repeatable, wins over the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Parse and validate a config, printing the resolved form.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List experiment names.
    ListExperiments,
}

fn load(path: &PathBuf, overrides: &[String]) -> Result<ExperimentConfig, ExperimentError> {
    let raw = fs::read_to_string(path)
        .map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
    let pairs = overrides
        .iter()
        .map(|kv| {
            kv.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| {
                    ExperimentError::Config(format!("override '{kv}' is not of the form key=value"))
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    validate_config_with_overrides(&raw, &pairs)
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Run {
            config,
            jobs,
            out,
            overrides,
        } => {
            let config = load(&config, &overrides)?;
            let mut pool = rayon::ThreadPoolBuilder::new();
            if let Some(jobs) = jobs {
                if jobs == 0 {
                    return Err(ExperimentError::Config("--jobs must be at least 1".into()));
                }
                pool = pool.num_threads(jobs);
            }
            let pool = pool
                .build()
                .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
            let output = pool.install(|| run_experiment(&config, out.as_deref()))?;
            for file in &output.data_files {
                println!("wrote {}", file.display());
            }
            println!("wrote {}", output.manifest.display());
        }
        Command::Validate { config, overrides } => {
            let config = load(&config, &overrides)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&config).expect("config serializes")
            );
        }
        Command::ListExperiments => {
            for (name, description) in list_experiments() {
                println!("{name:<20} {description}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(inner) = source {
                eprintln!("  caused by: {inner}");
                source = inner.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
