use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use crt_netcode_cli::args::{Cli, Command};
use crt_netcode_cli::manifest::{write_outputs, RunManifest};
use crt_netcode_cli::{commands, CliError};

fn execute(cli: Cli) -> Result<(), CliError> {
    let command = match cli.command {
        Command::Replay(args) => RunManifest::load(&args.manifest)?.command,
        other => other,
    };
    if matches!(command, Command::Replay(_)) {
        return Err(CliError::Usage("a manifest cannot replay another replay".into()));
    }
    let output = commands::run(&command)?;

    for line in &output.diagnostics {
        eprintln!("{line}");
    }
    if let Some(dir) = &cli.out {
        write_outputs(dir, &command, &output)?;
    }
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(output.artifacts[output.primary].contents.as_bytes())?;
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                CliError::Usage(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
