use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sweep_cli::{exit, run, run_oracle, Mode, RunError, ScenarioConfig};

#[derive(Parser)]
#[command(name = "sweep", version, about = "Solve, check and simulate sweeping-process scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario in the mode given by its config.
    Run {
        config: PathBuf,
        /// Worker threads for Monte Carlo; overrides the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check the scenario file without computing anything.
    Validate { config: PathBuf },
    /// Assess the geometric hypotheses for the scenario's set.
    Check {
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate a reference oracle on JSON parameters.
    Oracle {
        name: String,
        #[arg(default_value = "{}")]
        params: String,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn load(path: &PathBuf) -> Result<ScenarioConfig, ExitCode> {
    ScenarioConfig::load(path).map_err(|d| {
        eprintln!("{d}");
        code(exit::VALIDATION)
    })
}

fn report(result: Result<sweep_cli::RunOutcome, RunError>) -> ExitCode {
    match result {
        Ok(o) => {
            for line in &o.summary {
                println!("{line}");
            }
            println!("artifacts: {}", o.dir.display());
            if o.check_failed {
                eprintln!("check failed; see {}", o.dir.join("report.json").display());
            }
            code(o.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            code(e.exit_code())
        }
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, workers } => match load(&config) {
            Ok(cfg) => report(run(&cfg, None, workers)),
            Err(c) => c,
        },
        Command::Check { config, workers } => match load(&config) {
            Ok(cfg) => report(run(&cfg, Some(Mode::Check), workers)),
            Err(c) => c,
        },
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                let diags = cfg.validate();
                for d in &diags {
                    println!("{d}");
                }
                if diags.is_empty() {
                    println!("ok");
                    code(exit::SUCCESS)
                } else {
                    code(exit::VALIDATION)
                }
            }
            Err(c) => c,
        },
        Command::Oracle { name, params } => match run_oracle(&name, &params) {
            Ok(v) => {
                println!("{}", serde_json::to_string_pretty(&v).expect("json values serialize"));
                code(exit::SUCCESS)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(e.exit_code())
            }
        },
    }
}
