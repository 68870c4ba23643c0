use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cattaneo_cli::{execute, Command};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cattaneo", version, about = "Audits and 1-D simulations of second-sound materials")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON config (schema 1).
    config: PathBuf,
    /// Output directory; overrides `output` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed; overrides `seed` in the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the thermodynamic restrictions on the configured material.
    Audit(Common),
    /// Run the `simulate` scenario.
    Simulate(Common),
    /// Compare Cattaneo runs at scaled relaxation times with the Fourier run.
    Compare(Common),
    /// Repeat the scenario over a list of parameter values.
    Sweep(Common),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, args) = match cli.command {
        Cmd::Audit(a) => (Command::Audit, a),
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Compare(a) => (Command::Compare, a),
        Cmd::Sweep(a) => (Command::Sweep, a),
    };
    match execute(command, &args.config, args.out, args.seed) {
        Ok(lines) => {
            // A closed pipe downstream is not a failure of the run.
            let mut stdout = std::io::stdout().lock();
            for line in lines {
                let _ = writeln!(stdout, "{line}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cattaneo {}: {e}", command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
