//! Command-line front end: `run <config>`, `validate <config>`, `presets`.
//! Results and errors are printed as JSON on stdout.

pub mod config;
pub mod output;
pub mod run;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lift::{ForcePreset, InitialCondition};
use crate::nonlinearity::NonlinearityPreset;
use crate::potential::PotentialPreset;
pub use config::{ExperimentKind, RunConfig, SCHEMA_VERSION};
pub use run::{error_object, run, Failure, RunOutcome};

/// Caps rayon's global pool.
pub const THREADS_ENV: &str = "HALFLINE_NLS_THREADS";

#[derive(Debug, Parser)]
#[command(name = "halfline-nls", version, about = "Forced NLS with potential on the half-line")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a TOML config.
    Run { config: PathBuf },
    /// Parse and check a config, building the problem on the base grid.
    Validate { config: PathBuf },
    /// List preset names.
    Presets,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_CONTRACTION: i32 = 4;

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) | Error::Consistency(_) => EXIT_RUNTIME,
        _ => EXIT_INVALID,
    }
}

fn configure_threads() -> Result<()> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{text}`")))?;
    // a second call in the same process keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn presets() -> serde_json::Value {
    json!({
        "potential": PotentialPreset::NAMES,
        "nonlinearity": NonlinearityPreset::NAMES,
        "force": ForcePreset::NAMES,
        "initial": InitialCondition::NAMES,
        "experiment": ["solve", "convergence", "dependence", "hypotheses", "inequalities"],
        "schema_version": SCHEMA_VERSION,
    })
}

fn validate(path: &std::path::Path) -> Result<serde_json::Value> {
    let cfg = RunConfig::load(path)?;
    cfg.validate()?;
    let problem = cfg.problem_at(0)?;
    crate::lift::compatibility_check(&problem.initial, &problem.force)?;
    problem.lift()?;
    Ok(json!({
        "valid": true,
        "experiment": cfg.experiment,
        "interior": problem.grid.interior(),
        "output_directory": cfg.output_dir(),
    }))
}

/// Executes a parsed command; returns the JSON to print and the exit code.
pub fn execute(cli: &Cli) -> (serde_json::Value, i32) {
    if let Err(e) = configure_threads() {
        return (error_object(e.kind(), &e.to_string()), EXIT_INVALID);
    }
    let result = match &cli.command {
        Command::Presets => Ok((presets(), EXIT_OK)),
        Command::Validate { config } => validate(config).map(|v| (v, EXIT_OK)),
        Command::Run { config } => RunConfig::load(config).and_then(|c| run(&c)).map(|out| match out.failure {
            None => (json!({ "summary": out.summary, "files": out.files }), EXIT_OK),
            Some(f) => {
                let code = if f.kind == "contraction_failure" { EXIT_CONTRACTION } else { EXIT_BLOWUP };
                let mut obj = error_object(&f.kind, &f.message);
                obj["files"] = json!(out.files);
                (obj, code)
            }
        }),
    };
    result.unwrap_or_else(|e| (error_object(e.kind(), &e.to_string()), exit_code(&e)))
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    let (value, code) = execute(&cli);
    println!("{}", serde_json::to_string_pretty(&value).unwrap_or_default());
    code
}
