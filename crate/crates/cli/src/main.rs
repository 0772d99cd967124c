use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use endotomo_cli::{check, run_file, Overrides};

#[derive(Parser)]
#[command(name = "endotomo", version, about = "QND coupling and indirect homodyne tomography simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a TOML file.
    Run {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of tomography phases.
        #[arg(long)]
        phases: Option<usize>,
        /// Shots per phase (tomography) or in total (weak).
        #[arg(long)]
        shots: Option<usize>,
    },
    /// Run the identity suite and print a pass/fail table.
    Check {
        /// Print the results as JSON instead.
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            phases,
            shots,
        } => match run_file(&config, &Overrides { seed, out, phases, shots }) {
            Ok(m) => {
                println!("{} -> {}", m.scenario.name(), m.config.output.display());
                for (k, v) in &m.metrics {
                    println!("  {k:<40} {v:.6e}");
                }
                if m.passed {
                    ExitCode::SUCCESS
                } else {
                    eprintln!("checks failed");
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Check { json } => match check() {
            Ok(outcomes) => {
                if json {
                    println!("{}", serde_json::to_string_pretty(&outcomes).expect("serializable"));
                } else {
                    for c in &outcomes {
                        println!("{}", c.line());
                    }
                }
                if outcomes.iter().all(|c| c.passed) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
    }
}
