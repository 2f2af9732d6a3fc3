use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use shsade::codec::DiscreteSpace;
use shsade::experiment::{compare, oracle_csv, run_experiment};
use shsade::nas::{BiObjectiveConfig, PidsSpaceTemplate};

#[derive(Parser)]
#[command(
    name = "shsade",
    version,
    about = "Adaptive differential evolution and discrete architecture search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config and write traces plus summary.json.
    Run {
        config: PathBuf,
        /// Worker threads for seeds (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare median best-so-far curves of two trace directories.
    Compare {
        dir_a: PathBuf,
        dir_b: PathBuf,
        /// Write the aligned CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rank every configuration of a space under the surrogate.
    Oracle {
        space: PathBuf,
        /// Surrogate seed.
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        cost_budget: f64,
        #[arg(long, default_value_t = 1.0)]
        omega: f64,
        /// Only print the best K configurations.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Print the default block-structured search space as JSON.
    Template {
        #[arg(long, default_value_t = 7)]
        blocks: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config, threads } => match run_experiment(&config, threads) {
            Ok(report) => {
                for f in &report.files {
                    println!("{}", f.display());
                }
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Compare {
            dir_a,
            dir_b,
            output,
        } => match compare(&dir_a, &dir_b) {
            Ok(c) => {
                let csv = c.to_csv();
                match output {
                    Some(p) => {
                        if let Err(e) = std::fs::write(&p, csv) {
                            eprintln!("error: cannot write {}: {e}", p.display());
                            return ExitCode::from(2);
                        }
                    }
                    None => print!("{csv}"),
                }
                println!("verdict: {}", c.verdict_label());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Oracle {
            space,
            seed,
            cost_budget,
            omega,
            top,
        } => {
            let result = std::fs::read_to_string(&space)
                .map_err(|e| format!("cannot read {}: {e}", space.display()))
                .and_then(|t| DiscreteSpace::from_json(&t).map_err(|e| e.to_string()))
                .and_then(|s| {
                    let bi =
                        BiObjectiveConfig::new(cost_budget, omega).map_err(|e| e.to_string())?;
                    oracle_csv(&s, seed, &bi, top).map_err(|e| e.to_string())
                });
            match result {
                Ok(csv) => {
                    print!("{csv}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Template { blocks } => {
            let template = PidsSpaceTemplate {
                blocks,
                ..Default::default()
            };
            match template.build() {
                Ok(space) => {
                    println!("{}", space.to_json());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
