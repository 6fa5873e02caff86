use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use santalo_lab::{builtins, execute, ExperimentConfig};

#[derive(Parser)]
#[command(name = "santalo-lab", version, about = "Runs verification experiments and writes numeric reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config; writes report.json and report.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Maximum number of trials run at once.
        #[arg(long)]
        jobs: Option<usize>,
        /// Replaces the seed given in the config.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// List builtin experiments.
    List,
}

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for b in builtins::catalog() {
                println!("{:<30} {}", b.name, b.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, out, jobs, seed_override } => {
            let report = match ExperimentConfig::load(&config, seed_override).and_then(|cfg| execute(&cfg, jobs)) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {}: {e}", config.display());
                    return ExitCode::from(EXIT_USAGE);
                }
            };
            if let Err(e) = report.write(&out) {
                eprintln!("error: {e:#}");
                return ExitCode::from(EXIT_USAGE);
            }
            let total = report.checks.len();
            let failed: Vec<_> = report.failures().collect();
            for c in &failed {
                eprintln!("FAIL {}: {} {} {} (residual {:e}) {}", c.name, c.lhs, c.relation, c.rhs, c.residual, c.detail);
            }
            println!("{}: {} of {total} checks passed", report.experiment, total - failed.len());
            if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK_FAILED)
            }
        }
    }
}
