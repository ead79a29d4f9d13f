use std::fs;
use std::path::Path;
use std::process::ExitCode;

use qkd_core::io::{self, Invocation, OutputFormat};
use qkd_core::summary::run_session;
use qkd_core::sweep::run_sweep;
use qkd_core::Error;

fn execute(inv: Invocation) -> Result<(String, Option<std::path::PathBuf>), Error> {
    match inv {
        Invocation::Run { config, format, out } => {
            let summary = run_session(&config)?;
            Ok((io::emit_summary(&summary, format), out))
        }
        Invocation::Sweep { spec, format, out } => {
            let grid = run_sweep(&spec)?;
            let text = match format {
                OutputFormat::Csv => io::emit_grid_csv(&grid),
                OutputFormat::Json => io::emit_grid_json(&grid),
            };
            Ok((text, out))
        }
        Invocation::Help { text, .. } => Ok((text, None)),
        Invocation::Replay { input, format, out } => {
            let text = fs::read_to_string(&input)
                .map_err(|e| Error::Config { field: "input".into(), reason: format!("cannot read {}: {e}", input.display()) })?;
            let outcome = io::replay(&io::parse_replay_csv(&text)?)?;
            Ok((io::emit_summary(&outcome.summary, format), out))
        }
    }
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let result = match io::parse_config(&args, |p: &Path| fs::read_to_string(p)) {
        Ok(Invocation::Help { text, requested: true }) => {
            print!("{text}");
            return ExitCode::SUCCESS;
        }
        Ok(Invocation::Help { text, requested: false }) => {
            eprintln!("error[usage]: missing subcommand");
            eprint!("{text}");
            return ExitCode::from(2);
        }
        other => other.and_then(execute),
    };
    match result {
        Ok((text, None)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok((text, Some(path))) => match fs::write(&path, text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error[io]: cannot write {}: {e}", path.display());
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e);
            ExitCode::from(2)
        }
    }
}
