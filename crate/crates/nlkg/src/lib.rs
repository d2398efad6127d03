//! Command line, configuration, CSV/JSON persistence and SVG plots for the
//! `nlkg-core` experiments.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod run;
pub mod table;

use std::path::Path;

use serde_json::{json, Value};

use commands::{Cli, Command};
use config::FileConfig;
use error::CliResult;

/// The command and its resolved inputs, as echoed in the manifest.
fn config_echo(command: &Command, file: &FileConfig) -> Value {
    json!({ "args": command, "file": file })
}

/// Runs a parsed command line; returns what goes to stdout.
pub fn execute(cli: &Cli) -> CliResult<Value> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let started = run::now();
    let outcome = commands::run(&cli.command, &file)?;
    let name = cli.command.name();
    let echo = config_echo(&cli.command, &file);
    let root = run::output_root(cli.out.as_deref());
    let dir = run::create_run_dir(&root, name, &echo)?;
    let manifest = run::persist(&dir, name, echo, started, &outcome)?;
    Ok(json!({
        "command": name,
        "output_dir": dir,
        "files": manifest.outputs.iter().map(|o| o.file.clone()).collect::<Vec<_>>(),
        "summary": outcome.summary,
    }))
}

/// Parses `argv`, runs, prints, and returns the exit code.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    use clap::Parser;
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let err = error::CliError::Config(e.to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match execute(&cli) {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            0
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

/// Reads `csv` and renders it.
pub fn plot_file(csv: &Path, spec: &plot::PlotSpec) -> CliResult<String> {
    plot::emit_plot(&table::Table::read(csv)?, spec)
}
