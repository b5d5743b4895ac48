mod args;
mod commands;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command, Format, GlobalArgs};
use commands::{CliError, Outcome};

fn config_echo(command: &Command) -> (&'static str, Value) {
    let value = |v: Result<Value, serde_json::Error>| v.expect("arguments serialize");
    match command {
        Command::Density(a) => ("density", value(serde_json::to_value(a))),
        Command::Box(a) => ("box", value(serde_json::to_value(a))),
        Command::Holonomy(a) => ("holonomy", value(serde_json::to_value(a))),
        Command::Typicality(a) => ("typicality", value(serde_json::to_value(a))),
        Command::Decompose(a) => ("decompose", value(serde_json::to_value(a))),
        Command::Sweep(a) => ("sweep", value(serde_json::to_value(a))),
    }
}

fn run(global: &GlobalArgs, command: &Command) -> Result<Outcome, CliError> {
    match command {
        Command::Density(a) => commands::density(global, a),
        Command::Box(a) => commands::zero_box(global, a),
        Command::Holonomy(a) => commands::holonomy(global, a),
        Command::Typicality(a) => commands::typicality(global, a),
        Command::Decompose(a) => commands::decompose(global, a),
        Command::Sweep(a) => commands::sweep(global, a),
    }
}

fn emit(global: &GlobalArgs, text: &str) -> std::io::Result<()> {
    match &global.output {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let global = &cli.global;
    if global.jobs > 0 {
        // fails only if a pool already exists, which cannot happen this early
        let _ = rayon::ThreadPoolBuilder::new().num_threads(global.jobs).build_global();
    }
    let (name, config) = config_echo(&cli.command);
    let start = Instant::now();
    let result = run(global, &cli.command);
    let elapsed = start.elapsed().as_secs_f64();

    let mut envelope = json!({
        "tool": "tentlimit",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "precision": global.precision,
        "config": config,
    });
    if global.timing {
        envelope["timing_seconds"] = json!(elapsed);
    }
    let (code, text) = match result {
        Ok(out) => {
            let code = out.status.exit_code();
            envelope["status"] = json!(out.status);
            envelope["payload"] = out.payload;
            let text = match global.format {
                Format::Json => serde_json::to_string_pretty(&envelope).expect("envelope serializes") + "\n",
                Format::Csv => out.csv,
            };
            (code, text)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            envelope["status"] = json!("error");
            envelope["error"] = json!({ "code": e.code, "message": e.message });
            let text = match global.format {
                Format::Json => serde_json::to_string_pretty(&envelope).expect("envelope serializes") + "\n",
                Format::Csv => String::new(),
            };
            (e.code, text)
        }
    };
    if global.timing {
        eprintln!("{name}: {elapsed:.3} s");
    }
    if !text.is_empty() {
        if let Err(err) = emit(global, &text) {
            eprintln!("error: cannot write output: {err}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code as u8)
}
