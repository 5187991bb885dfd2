use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use neutral_lame::io::{
    emit, parse_scenario, record_timestamp, run_command, Command, RunOptions, ScenarioError,
    EXIT_NUMERICAL, EXIT_VALIDATION,
};

/// Solvers and numerical experiments for neutral coated inclusions.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    /// solve-disk, solve-bem, check-neutral, find-neutral, shear-sweep,
    /// rigidity, verify-identities or plemelj-check
    command: Command,
    /// Scenario file (TOML)
    #[arg(long)]
    scenario: PathBuf,
    /// Directory for records.jsonl and CSV tables
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print only the JSON record on stdout
    #[arg(long)]
    quiet: bool,
    /// Override numerics.nodes
    #[arg(long)]
    nodes: Option<usize>,
    /// Override numerics.order
    #[arg(long)]
    order: Option<usize>,
    /// Override numerics.seed
    #[arg(long)]
    seed: Option<u64>,
    /// Stamp the record with the current time (SOURCE_DATE_EPOCH wins)
    #[arg(long)]
    timestamp: bool,
}

fn report_scenario_error(path: &std::path::Path, e: &ScenarioError) {
    match e {
        ScenarioError::Parse {
            line,
            column,
            message,
        } => {
            eprintln!("{}:{line}:{column}: {message}", path.display())
        }
        ScenarioError::Validation(violations) => {
            for v in violations {
                eprintln!("{}: {v}", path.display());
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = |c: i32| ExitCode::from(c as u8);

    let text = match std::fs::read_to_string(&cli.scenario) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {e}", cli.scenario.display());
            return code(EXIT_VALIDATION);
        }
    };
    let scenario = match parse_scenario(&text)
        .and_then(|s| s.with_overrides(cli.order, cli.nodes, cli.seed))
    {
        Ok(s) => s,
        Err(e) => {
            report_scenario_error(&cli.scenario, &e);
            return code(EXIT_VALIDATION);
        }
    };

    let options = RunOptions {
        timestamp: record_timestamp(cli.timestamp),
        fixtures: None,
    };
    let outcome = run_command(cli.command, &scenario, &options);

    if outcome.exit_code != 0 || !cli.quiet {
        for line in &outcome.diagnostics {
            eprintln!("{}: {line}", cli.command);
        }
    }
    if let Some(dir) = &cli.out {
        match emit(dir, &outcome.record, &outcome.tables) {
            Ok(paths) if !cli.quiet => {
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
            }
            Ok(_) => {}
            Err(e) => {
                eprintln!("{}: {e}", dir.display());
                return code(EXIT_NUMERICAL.max(outcome.exit_code));
            }
        }
    }
    print!("{}", outcome.record.to_json_line());
    code(outcome.exit_code)
}
