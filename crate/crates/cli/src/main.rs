mod args;
mod commands;
mod error;
mod input;

use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use args::{Cli, Command};
use error::usage;

/// Exit codes: 0 success, 1 failed computation, 2 bad usage, 3 finished but
/// a target was missed (the artifact is still written).
const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_FLAGGED: u8 = 3;

/// Result of a command that ran to completion.
pub struct Finished {
    /// Targets that were not met; non-empty means exit code 3.
    pub flags: Vec<String>,
}

impl Finished {
    pub fn ok() -> Self {
        Self { flags: Vec::new() }
    }
}

fn read_config(path: &Path) -> anyhow::Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(usage("config file must hold a JSON object")),
        Err(e) => Err(usage(format!("config {}: {e}", path.display()))),
    }
}

/// Overlays config keys onto the parsed flags. Returns the merged arguments
/// and their JSON form, which every artifact embeds.
fn merge<A: Serialize + DeserializeOwned>(args: A, config: Option<&Map<String, Value>>) -> anyhow::Result<(A, Value)> {
    let mut value = serde_json::to_value(&args)?;
    if let (Some(cfg), Value::Object(obj)) = (config, &mut value) {
        for (k, v) in cfg {
            if !obj.contains_key(k) {
                return Err(usage(format!("unknown config key '{k}'")));
            }
            obj.insert(k.clone(), v.clone());
        }
    }
    let merged: A = serde_json::from_value(value.clone()).map_err(|e| usage(format!("config: {e}")))?;
    let value = serde_json::to_value(&merged)?;
    Ok((merged, value))
}

fn dispatch(cli: Cli) -> anyhow::Result<Finished> {
    let config = cli.config.as_deref().map(read_config).transpose()?;
    let config = config.as_ref();
    let name = cli.command.name();
    match cli.command {
        Command::GenToy(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::gen_toy(name, &a, cfg)
        }
        Command::Train(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::train(name, &a, cfg)
        }
        Command::TrainCascade(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::train_cascade(name, &a, cfg)
        }
        Command::Eval(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::eval(name, &a, cfg)
        }
        Command::Roc(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::roc(name, &a, cfg)
        }
        Command::SolveQp(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::solve_qp(name, &a, cfg)
        }
        Command::Analyze(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::analyze(name, &a, cfg)
        }
        Command::ThetaSweep(a) => {
            let (a, cfg) = merge(a, config)?;
            commands::theta_sweep(name, &a, cfg)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => {
            error::report("usage", e.to_string().trim());
            return ExitCode::from(EXIT_USAGE);
        }
    };
    match dispatch(cli) {
        Ok(done) if done.flags.is_empty() => ExitCode::SUCCESS,
        Ok(done) => {
            eprintln!("{}", serde_json::json!({ "flagged": done.flags }));
            ExitCode::from(EXIT_FLAGGED)
        }
        Err(e) => {
            error::report(error::kind(&e), &format!("{e:#}"));
            ExitCode::from(if error::is_usage(&e) { EXIT_USAGE } else { EXIT_FAILED })
        }
    }
}
