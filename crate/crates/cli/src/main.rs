use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semiclassical_cli::run::{run_scenario, validate_file, RunError, RunOptions};

#[derive(Parser)]
#[command(name = "semiclassical", version, about = "Run semiclassical propagation scenarios from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Directory for artifacts; overrides output.directory in the config.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads for the parallel parts (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Seed for the root-search start points.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a config file.
    Run { config: PathBuf },
    /// Report every problem in a config file without running it.
    Validate { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }

    match cli.command {
        Command::Validate { config } => match validate_file(&config) {
            Ok(issues) if issues.is_empty() => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Ok(issues) => {
                for i in &issues {
                    println!("{i}");
                }
                ExitCode::from(2)
            }
            Err(e) => fail(&e),
        },
        Command::Run { config } => {
            let bytes = match std::fs::read(&config) {
                Ok(b) => b,
                Err(e) => return fail(&RunError::Io(e)),
            };
            let opts = RunOptions {
                output_dir: cli.output_dir,
                seed: cli.seed,
                jobs: cli.jobs,
            };
            match run_scenario(&bytes, &opts) {
                Ok(outcome) => {
                    for c in &outcome.checks {
                        println!(
                            "{} {} {:.6e} ({})",
                            if c.passed { "PASS" } else { "FAIL" },
                            c.name,
                            c.value,
                            c.bound
                        );
                    }
                    println!("wrote {} files to {}", outcome.files.len(), outcome.directory.display());
                    if outcome.passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(4)
                    }
                }
                Err(e) => fail(&e),
            }
        }
    }
}

fn fail(e: &RunError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
