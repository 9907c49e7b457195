//! Command-line front end of the `passim` binary.
//!
//! ```text
//! passim run <scenario> [--policy igs|wgs|sga|none] [--out DIR] [--set key=value]... [--batch]
//! ```
//!
//! `<scenario>` is a bundled preset name or a path to a TOML scenario file.
//! Every run writes `<out>/<scenario>_<policy>.csv` and a plain-text summary
//! next to it; batch mode runs all four policies and adds
//! `<scenario>_batch.summary.toml`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::power_valves::Policy;
use crate::scenario::Scenario;
use crate::simulator::{self, write_csv, RunOutput};

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "PASSIM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_IO: i32 = 5;
pub const EXIT_OTHER: i32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "passim",
    version,
    about = "Passivity-based aerial interaction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario (bundled preset name or TOML file).
    Run(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    scenario: String,
    /// Override the scenario's valve policy.
    #[arg(long, value_parser = parse_policy, conflicts_with = "batch")]
    policy: Option<Policy>,
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
    /// Override a scenario field, e.g. `--set tank.eta1=0.9`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Run IGS, WGS, SGA and NONE on the same scenario.
    #[arg(long)]
    batch: bool,
}

fn parse_policy(s: &str) -> std::result::Result<Policy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub policy: Option<Policy>,
    pub out_dir: PathBuf,
    pub overrides: Vec<String>,
    pub batch: bool,
}

/// Files written by [`run_command`] and the text printed for the user.
#[derive(Debug, Clone)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub text: String,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse { .. } => EXIT_PARSE,
        Error::Validation(_)
        | Error::InvalidInertia(_)
        | Error::InvalidRotation { .. }
        | Error::NotSkewSymmetric { .. } => EXIT_VALIDATION,
        Error::Io { .. } | Error::Csv(_) => EXIT_IO,
        Error::NonFiniteState | Error::TankUnderflow { .. } => EXIT_OTHER,
    }
}

/// Loads the scenario, applies overrides and the policy flag.
pub fn load_scenario(cfg: &RunConfig) -> Result<Scenario> {
    let mut scenario = Scenario::load(&cfg.scenario)?.with_overrides(&cfg.overrides)?;
    if let Some(p) = cfg.policy {
        scenario.sim.policy = p;
    }
    Ok(scenario)
}

pub fn run_command(cfg: &RunConfig) -> Result<Report> {
    let scenario = load_scenario(cfg)?;
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::io(&cfg.out_dir, e))?;
    let stem = file_stem(&scenario.name);
    if cfg.batch {
        run_batch(&scenario, &stem, &cfg.out_dir)
    } else {
        let out = simulator::run(&scenario)?;
        let csv = write_run(&out, &stem, &cfg.out_dir)?;
        let summary_path = cfg
            .out_dir
            .join(format!("{stem}_{}.summary.toml", scenario.sim.policy));
        let text = out.summary.to_text();
        write_file(&summary_path, &text)?;
        Ok(Report {
            files: vec![csv, summary_path],
            text,
        })
    }
}

fn run_batch(base: &Scenario, stem: &str, out_dir: &Path) -> Result<Report> {
    let scenarios: Vec<Scenario> = Policy::ALL
        .iter()
        .map(|&p| {
            let mut s = base.clone();
            s.sim.policy = p;
            s
        })
        .collect();
    let results: Vec<Result<(RunOutput, PathBuf)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .iter()
            .map(|s| {
                scope.spawn(move || {
                    let out = simulator::run(s)?;
                    let path = write_run(&out, stem, out_dir)?;
                    Ok((out, path))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect()
    });

    let mut files = Vec::new();
    let names: Vec<String> = Policy::ALL.iter().map(|p| format!("\"{p}\"")).collect();
    let mut doc = format!(
        "scenario = \"{}\"\npolicies = [{}]\n",
        base.name,
        names.join(", ")
    );
    let mut table =
        String::from("policy  termination     cart_distance  audit_pass_rate  tank_drain_time\n");
    for r in results {
        let (out, path) = r?;
        files.push(path);
        let s = &out.summary;
        write!(doc, "\n[{}]\n{}", s.policy, s.to_text()).unwrap();
        let drain = s
            .tank_drain_time
            .map_or("-".to_string(), |t| format!("{t:.3}"));
        writeln!(
            table,
            "{:<7} {:<15} {:>13.4} {:>16.4} {:>16}",
            s.policy.name(),
            serde_name(&s.termination),
            s.cart_distance,
            s.audit_pass_rate,
            drain
        )
        .unwrap();
    }
    let summary_path = out_dir.join(format!("{stem}_batch.summary.toml"));
    write_file(&summary_path, &doc)?;
    files.push(summary_path);
    Ok(Report { files, text: table })
}

fn serde_name<T: serde::Serialize>(v: &T) -> String {
    toml::Value::try_from(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

fn write_run(out: &RunOutput, stem: &str, out_dir: &Path) -> Result<PathBuf> {
    let path = out_dir.join(format!("{stem}_{}.csv", out.summary.policy));
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_csv(&out.log, BufWriter::new(file))?;
    Ok(path)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Scenario names are used in file names; anything outside `[A-Za-z0-9_-]`
/// becomes `_`.
fn file_stem(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "scenario".into()
    } else {
        s
    }
}

/// Parses `args` (including the program name), runs, and returns the exit
/// code. Output goes to `stdout`, diagnostics to `stderr`.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let Command::Run(a) = cli.command;
    let cfg = RunConfig {
        scenario: a.scenario,
        policy: a.policy,
        out_dir: a.out,
        overrides: a.overrides,
        batch: a.batch,
    };
    match run_command(&cfg) {
        Ok(report) => {
            let _ = write!(stdout, "{}", report.text);
            for f in &report.files {
                let _ = writeln!(stdout, "wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
