use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsbench_cli::config::DEFAULT_CACHE_DIR;
use fsbench_cli::{config, plot, run, CliError, CliResult};

#[derive(Parser)]
#[command(name = "fsbench", version, about = "Benchmark feature selectors on tabular classification data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one selector on one dataset and write its scores as JSON.
    Select {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        method: String,
        #[arg(long)]
        dataset: String,
        /// Defaults to the first configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configured method on every dataset and seed.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Results directory; defaults to the configured one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw SVG charts from a results directory.
    Plot {
        /// Results directory; defaults to the configured output directory.
        results: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Chart directory; defaults to `<results>/plots`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Inspect or empty the LLM exchange cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
        #[arg(long, global = true)]
        config: Option<PathBuf>,
        /// Cache directory; overrides the configured one.
        #[arg(long, global = true)]
        dir: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum CacheAction {
    Ls,
    Clear,
}

fn cache_dir(config: Option<&Path>, dir: Option<PathBuf>) -> CliResult<PathBuf> {
    match (dir, config) {
        (Some(d), _) => Ok(d),
        (None, Some(c)) => Ok(config::load(c)?.run.cache_dir),
        (None, None) => Ok(PathBuf::from(DEFAULT_CACHE_DIR)),
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Select {
            config,
            method,
            dataset,
            seed,
            out,
        } => {
            let cfg = config::load(&config)?;
            let path = run::cmd_select(&cfg, &method, &dataset, seed, out.as_deref())?;
            println!("{}", path.display());
        }
        Command::Bench { config, out } => {
            let cfg = config::load(&config)?;
            let outcome = run::cmd_bench(&cfg, out.as_deref())?;
            if let Some(report) = &outcome.report {
                for (method, mean) in report.methods_by_mean() {
                    println!("{mean:.4}\t{method}");
                }
            }
            println!(
                "{} curves, {} provider calls, results in {}",
                outcome.curves.len(),
                outcome.provider_calls,
                outcome.out_dir.display()
            );
        }
        Command::Plot { results, config, out } => {
            let results = match (results, config) {
                (Some(r), _) => r,
                (None, Some(c)) => config::load(&c)?.run.output_dir,
                (None, None) => return Err(CliError::config("give a results directory or --config")),
            };
            for p in plot::cmd_plot(&results, out.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Cache { action, config, dir } => {
            let dir = cache_dir(config.as_deref(), dir)?;
            match action {
                CacheAction::Ls => {
                    for line in run::cmd_cache_ls(&dir)? {
                        println!("{line}");
                    }
                }
                CacheAction::Clear => println!("removed {} records from {}", run::cmd_cache_clear(&dir)?, dir.display()),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "fsbench_cli=info,warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
