//! Batch front end: JSON config in, JSON report (and CSV tables) out.
//!
//! Exit codes: 0 success, 1 certification or bound failure, 2 input error.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::Path;

use bcp_core::rng::RNG_IDENTITY;
use clap::{Parser, ValueEnum};
use serde::Serialize;

pub use commands::{
    cmd_certify, cmd_density, cmd_estimate, cmd_validate, expand_defaults, CertifyResult, DensityResult,
    EstimateResult, Normalization, ValidateResult,
};
pub use config::{parse_config, parse_overrides, RunConfig};

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "BCP_THREADS";

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Malformed config, bad arguments, unreadable files.
    Input(String),
    /// A certificate or bound could not be produced.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Input(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bcp_core::Error> for CliError {
    fn from(e: bcp_core::Error) -> Self {
        use bcp_core::Error as E;
        match e {
            E::NeedsManualCertificate(_) => CliError::Failure(format!(
                "{e} (set certificate.K, certificate.beta, certificate.gamma and certificate.v0 by hand)"
            )),
            E::UndefinedConstant(_) => CliError::Failure(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Certificate (m, T, K, beta, gamma, v0) of the normalised domain.
    Validate,
    /// Monte Carlo survival probability.
    Estimate,
    /// Dilation gaps against the certified bound c * eps.
    Certify,
    /// Exit-time histogram against the density envelope.
    Density,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Validate => "validate",
            Command::Estimate => "estimate",
            Command::Certify => "certify",
            Command::Density => "density",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bcp", version, about = "Boundary-crossing probabilities of Brownian motion")]
struct Args {
    command: Command,
    /// JSON config with keys domain, certificate, sim, command, output.
    config: String,
    /// Overrides such as `--sim.seed 7` or `--command.eps=[0.01,0.02]`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY.PATH VALUE")]
    overrides: Vec<String>,
}

/// Report envelope shared by all subcommands.
#[derive(Debug, Serialize)]
pub struct Report<'a, T> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub rng: &'static str,
    pub config: &'a RunConfig,
    pub normalization: Normalization,
    pub result: T,
    pub generated_at: String,
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
    pub csv: Option<String>,
}

impl RunOutput {
    fn error(e: CliError) -> Self {
        RunOutput { exit_code: e.exit_code(), stdout: String::new(), stderr: format!("error: {e}\n"), csv: None }
    }
}

/// Runs the CLI on `args` (without the program name).
pub fn run(args: &[String]) -> RunOutput {
    let argv = std::iter::once("bcp".to_string()).chain(args.iter().cloned());
    let parsed = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let (stdout, stderr) = if code == 0 { (text, String::new()) } else { (String::new(), text) };
            return RunOutput { exit_code: code, stdout, stderr, csv: None };
        }
    };
    let cfg = match load(&parsed) {
        Ok(c) => c,
        Err(e) => return RunOutput::error(e),
    };
    match execute(parsed.command, &cfg) {
        Ok(out) => out,
        Err(e) => RunOutput::error(e),
    }
}

fn load(a: &Args) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", a.config)))?;
    let overrides = parse_overrides(&a.overrides)?;
    parse_config(&text, &a.config, &overrides)
}

/// Runs one subcommand on a parsed config and renders its report.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let effective = expand_defaults(cfg)?;
    let normalization = commands::prepare(&effective)?.normalization;
    let (json, csv, extra, exit_code) = match command {
        Command::Validate => {
            let r = cmd_validate(&effective)?;
            let cert = to_json(&r.certificate)?;
            (render(command, &effective, normalization, &r)?, None, Some(("certificate.json", cert)), 0)
        }
        Command::Estimate => {
            let r = cmd_estimate(&effective)?;
            (render(command, &effective, normalization, &r)?, None, None, 0)
        }
        Command::Certify => {
            let r = cmd_certify(&effective)?;
            let code = if r.all_pass { 0 } else { 1 };
            (render(command, &effective, normalization, &r)?, Some(r.to_csv()), None, code)
        }
        Command::Density => {
            let r = cmd_density(&effective)?;
            let code = if r.violations == 0 { 0 } else { 1 };
            (render(command, &effective, normalization, &r)?, Some(r.to_csv()), None, code)
        }
    };
    if let Some(dir) = &effective.output.dir {
        let dir = Path::new(dir);
        let write = |name: &str, body: &str| {
            std::fs::write(dir.join(name), body)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", dir.join(name).display())))
        };
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Input(format!("cannot create {}: {e}", dir.display())))?;
        write(&format!("{}.json", command.name()), &json)?;
        if let Some(c) = &csv {
            write(&format!("{}.csv", command.name()), c)?;
        }
        if let Some((name, body)) = &extra {
            write(name, body)?;
        }
    }
    let stderr = match exit_code {
        0 => String::new(),
        _ => format!("{}: check failed, see report\n", command.name()),
    };
    Ok(RunOutput { exit_code, stdout: json, stderr, csv })
}

fn render<T: Serialize>(
    command: Command,
    cfg: &RunConfig,
    normalization: Normalization,
    result: &T,
) -> Result<String, CliError> {
    let report = Report {
        tool: "bcp",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        rng: RNG_IDENTITY,
        config: cfg,
        normalization,
        result,
        generated_at: timestamp(),
    };
    to_json(&report)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Input(format!("serialising report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn timestamp() -> String {
    time::OffsetDateTime::now_utc()
        .format(&time::format_description::well_known::Rfc3339)
        .unwrap_or_default()
}

/// Default worker count: `BCP_THREADS` when set and valid, otherwise the
/// available parallelism.
pub fn default_threads() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Drops the `generated_at` line so reports can be compared.
pub fn strip_timestamp(report: &str) -> String {
    report
        .lines()
        .filter(|l| !l.trim_start().starts_with("\"generated_at\""))
        .collect::<Vec<_>>()
        .join("\n")
}
