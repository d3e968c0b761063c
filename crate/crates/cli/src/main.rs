use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hubo_cli::error::exit;
use hubo_cli::{diagnostics, run_experiment, CliError, DiagnosticsSpec, ExperimentSpec};
use hubo_core::benchmarks::{make_benchmark, BENCHMARK_NAMES};

#[derive(Parser)]
#[command(
    name = "hubo",
    version,
    about = "Bayesian optimisation with expanding search spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a key = value config file.
    Run {
        /// Config file; keys may also be supplied with `--set` alone.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override a config entry; may be repeated, later wins.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Check the series bounds, geometry and hypercube distance bound.
    Diagnostics {
        /// Directory for diagnostics.csv.
        #[arg(long)]
        out: PathBuf,
        /// Override a diagnostics parameter, e.g. `seeds=50`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// List the built-in benchmark functions.
    ListBenchmarks,
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, set } => {
            let spec = ExperimentSpec::load(config.as_deref(), &set)?;
            for w in spec.warnings() {
                eprintln!("warning: {w}");
            }
            let manifest = run_experiment(&spec)?;
            for f in &manifest.failures {
                eprintln!("run {} seed {} failed: {}", f.algorithm, f.seed, f.reason);
            }
            println!(
                "wrote {} files to {}",
                manifest.files.len(),
                spec.out_dir.display()
            );
            Ok(if manifest.is_partial() {
                exit::PARTIAL
            } else {
                exit::SUCCESS
            })
        }
        Command::Diagnostics { out, set } => {
            let spec = DiagnosticsSpec::default().with_overrides(&set)?;
            let (path, checks) = diagnostics(&spec, &out)?;
            for c in &checks {
                println!("{c}");
            }
            println!("report: {}", path.display());
            Ok(if checks.iter().all(|c| c.passed) {
                exit::SUCCESS
            } else {
                exit::FAILURE
            })
        }
        Command::ListBenchmarks => {
            for name in BENCHMARK_NAMES {
                let dim = match name {
                    "ackley" | "levy" => None,
                    _ => make_benchmark(name, None).ok().map(|b| b.dim),
                };
                let b = make_benchmark(name, Some(dim.unwrap_or(2)))?;
                let dim = dim.map_or_else(|| "any".to_string(), |d| d.to_string());
                println!("{name:<10} dim={dim:<4} domain=[{}, {}]", b.lower, b.upper);
            }
            Ok(exit::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
