use clap::{Parser, Subcommand};
use fracheat_cli::{catalog, CliError, ExperimentConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Runs numerical experiments on the stochastic fractional heat equation.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Override the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List experiment kinds.
    List,
    /// Exit 0 if every check in a report passed, 4 otherwise.
    Check { report: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = fracheat_cli::init_threads().and_then(|_| match cli.command {
        Command::List => {
            print!("{}", catalog::render());
            Ok(())
        }
        Command::Run { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let outcome = fracheat_cli::run(&cfg)?;
            for c in &outcome.report.checks {
                println!(
                    "[{}] {}: {}",
                    if c.passed { "pass" } else { "FAIL" },
                    c.name,
                    c.detail
                );
            }
            println!("artifacts in {}", outcome.dir.display());
            let failed = outcome.report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::ChecksFailed {
                    failed,
                    total: outcome.report.checks.len(),
                });
            }
            Ok(())
        }
        Command::Check { report } => {
            let r = fracheat_cli::check(&report)?;
            println!("{}: all {} checks passed", r.experiment, r.checks.len());
            Ok(())
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
