use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::Value;

use synclab_core::sim::run;

use crate::config::{self, ScenarioFile, REFERENCE_JSON};
use crate::error::CliError;
use crate::output::{self, RunSummary};

#[derive(Debug, Parser)]
#[command(
    name = "synclab",
    version,
    about = "Distributed observer and adaptive arm synchronization simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file and print OK.
    Validate { file: PathBuf },
    /// Simulate one scenario and write its artifacts.
    Run(RunArgs),
    /// Run one scenario per value of a scalar parameter, in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
#[group(id = "source", required = true, multiple = false, args = ["file", "reference"])]
pub struct Source {
    pub file: Option<PathBuf>,
    /// Use the built-in six-arm reference scenario.
    #[arg(long)]
    pub reference: bool,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Simulate the observer bank without arms.
    #[arg(long)]
    pub observer_only: bool,
    /// Output directory.
    #[arg(long, env = "SYNCLAB_OUT", default_value = "synclab-out")]
    pub out: PathBuf,
    /// Override a config field, e.g. `--set sim.dt=2e-3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
    /// Exit with code 4 if a convergence gate fails.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: Source,
    #[command(flatten)]
    pub common: Common,
    /// Dotted path of the swept field, e.g. `observer.mu`.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub values: Vec<String>,
}

fn load_document(source: &Source) -> Result<Value, CliError> {
    let text = match &source.file {
        Some(path) => fs::read_to_string(path).map_err(|e| CliError::io(path, e))?,
        None => REFERENCE_JSON.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| CliError::Schema(e.to_string()))
}

fn prepare(source: &Source, common: &Common) -> Result<Value, CliError> {
    let mut doc = load_document(source)?;
    config::apply_overrides(&mut doc, &common.overrides)?;
    if common.observer_only {
        config::set_path(&mut doc, "sim.observer_only", Value::Bool(true))?;
    }
    Ok(doc)
}

/// Validate, simulate, summarize and write artifacts for one document.
pub fn execute(doc: Value, out: &Path) -> Result<RunSummary, CliError> {
    let scenario = ScenarioFile::from_value(doc)?.to_scenario()?;
    let log = run(&scenario).map_err(CliError::from_run)?;
    let (summary, pe) = output::summarize(&log, &scenario)?;
    output::write_artifacts(out, &log, &summary, pe.as_ref())?;
    Ok(summary)
}

pub fn cmd_validate(file: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(file).map_err(|e| CliError::io(file, e))?;
    ScenarioFile::from_json(&text)?.to_scenario()?;
    println!("OK");
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let doc = prepare(&args.source, &args.common)?;
    let summary = execute(doc, &args.common.out)?;
    println!(
        "wrote {} (max |v_err| {:.3e}, max |omega_err| {:.3e}{})",
        args.common.out.display(),
        summary.max_v_err,
        summary.max_omega_err,
        summary
            .max_e
            .map(|e| format!(", max |e| {e:.3e}"))
            .unwrap_or_default()
    );
    if args.check && !summary.gates_pass() {
        let failed: Vec<String> = summary
            .gates
            .iter()
            .filter(|g| !g.pass)
            .map(|g| format!("{} = {:e} > {:e}", g.name, g.value, g.limit))
            .collect();
        return Err(CliError::Gate(failed.join("; ")));
    }
    Ok(())
}

fn get_path<'a>(root: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').try_fold(root, |cur, seg| match cur {
        Value::Object(map) => map.get(seg),
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
        _ => None,
    })
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-+=".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Outcome of one sweep member.
#[derive(Debug)]
pub struct SweepOutcome {
    pub value: String,
    pub dir: PathBuf,
    pub result: Result<RunSummary, CliError>,
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<Vec<SweepOutcome>, CliError> {
    let values: Vec<String> = args
        .values
        .iter()
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if values.is_empty() {
        println!("no values given; nothing to run");
        return Ok(Vec::new());
    }
    let doc = prepare(&args.source, &args.common)?;
    match get_path(&doc, &args.param) {
        Some(Value::Number(_)) | Some(Value::Bool(_)) => {}
        _ => {
            return Err(CliError::Schema(format!(
                "'{}' does not address a scalar config field",
                args.param
            )))
        }
    }
    let out = &args.common.out;
    let outcomes: Vec<SweepOutcome> = values
        .par_iter()
        .map(|value| {
            let dir = out.join(sanitize(&format!("{}={value}", args.param)));
            let mut doc = doc.clone();
            let result = config::set_path(&mut doc, &args.param, config::parse_value(value))
                .and_then(|_| execute(doc, &dir));
            SweepOutcome {
                value: value.clone(),
                dir,
                result,
            }
        })
        .collect();
    write_sweep_summary(out, &args.param, &outcomes)?;
    for o in &outcomes {
        match &o.result {
            Ok(s) => println!(
                "{}={}: ok (max |v_err| {:.3e})",
                args.param, o.value, s.max_v_err
            ),
            Err(e) => eprintln!("{}={}: {e}", args.param, o.value),
        }
    }
    Ok(outcomes)
}

fn write_sweep_summary(out: &Path, param: &str, outcomes: &[SweepOutcome]) -> Result<(), CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let path = out.join("sweep_summary.csv");
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
    let mut text = String::from(
        "param,value,status,exit_code,max_v_err,max_omega_err,max_e,max_e_dot,gates_pass,dir\n",
    );
    for o in outcomes {
        let (status, code, cols) = match &o.result {
            Ok(s) => (
                "ok".to_string(),
                0,
                format!(
                    "{:.16e},{:.16e},{},{},{}",
                    s.max_v_err,
                    s.max_omega_err,
                    opt(s.max_e),
                    opt(s.max_e_dot),
                    s.gates_pass()
                ),
            ),
            Err(e) => (
                format!("\"{}\"", e.to_string().replace('"', "'")),
                e.exit_code(),
                ",,,,".to_string(),
            ),
        };
        text.push_str(&format!(
            "{param},{},{status},{code},{cols},{}\n",
            o.value,
            o.dir.display()
        ));
    }
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

/// Dispatch and return the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Validate { file } => cmd_validate(file).map(|_| 0),
        Command::Run(args) => cmd_run(args).map(|_| 0),
        // partial results stay on disk; report the worst failure
        Command::Sweep(args) => cmd_sweep(args).map(|outcomes| {
            outcomes
                .iter()
                .filter_map(|o| o.result.as_ref().err().map(CliError::exit_code))
                .max()
                .unwrap_or(0)
        }),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    })
}
