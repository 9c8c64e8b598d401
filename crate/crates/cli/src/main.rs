use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use macsim_core::compare::compare;
use macsim_core::output::{emit, read_summary};
use macsim_core::{parse_scenario, run_sweep, Policy, SimError};

#[derive(Parser)]
#[command(name = "macsim", version, about = "Single-cell downlink MAC scheduling simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario under one or more policies and seeds.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated: BCQQ, MLWDF, PF, RR. Defaults to the scenario's policy.
        #[arg(long, value_delimiter = ',')]
        policy: Vec<String>,
        /// Comma-separated seeds. Defaults to the scenario's seed.
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        /// Overrides the scenario duration (1 TTI = 1 ms).
        #[arg(long = "duration-ms")]
        duration_ms: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the per-slot trace.
        #[arg(long)]
        trace: bool,
        /// Reporting window length; the whole run when omitted.
        #[arg(long = "window-ms")]
        window_ms: Option<u64>,
    },
    /// Compare the policies of a finished `run` output directory.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn exit_code(err: &SimError) -> ExitCode {
    if err.is_validation() {
        ExitCode::from(1)
    } else {
        ExitCode::from(2)
    }
}

fn run(cmd: Command) -> Result<(), SimError> {
    match cmd {
        Command::Run {
            scenario,
            policy,
            seed,
            duration_ms,
            out,
            trace,
            window_ms,
        } => {
            let text = fs::read_to_string(&scenario).map_err(|e| SimError::Io {
                path: scenario.clone(),
                source: e,
            })?;
            let mut sc = parse_scenario(&text)?;
            if let Some(d) = duration_ms {
                sc.duration_tti = d;
            }
            if window_ms.is_some() {
                sc.window_tti = window_ms;
            }
            sc.validate()?;
            let policies = if policy.is_empty() {
                vec![sc.policy]
            } else {
                policy
                    .iter()
                    .map(|p| p.parse::<Policy>())
                    .collect::<Result<Vec<_>, _>>()?
            };
            let seeds = if seed.is_empty() { vec![sc.seed] } else { seed };
            let runs = run_sweep(&sc, &policies, &seeds, trace)?;
            for path in emit(&sc, &runs, &out)? {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Compare { input } => {
            let summary = read_summary(&input)?;
            let cmp = compare(&summary.runs)?;
            print!("{}", cmp.render());
            let path = input.join("compare.json");
            let mut text = cmp.to_json();
            text.push('\n');
            fs::write(&path, text).map_err(|e| SimError::Io { path, source: e })?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}
