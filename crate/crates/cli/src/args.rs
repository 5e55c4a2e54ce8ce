//! Flag parsing and config-file merging.
//!
//! Every command accepts the same flag set. A JSON file given with
//! `--config` supplies defaults under the flag names with underscores
//! (`sigma0_sq`, `sigma_sq`, ...); flags on the command line win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use infoacq::{ModelError, Params};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "infoacq", version, about = "Optimal information acquisition about an AR(1) state")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Steady-state report as JSON.
    Solve(Flags),
    /// Optimal variance/precision path (CSV: t,p_t,v_t,x_t,cost_t).
    Trace(Flags),
    /// Monte Carlo check of the variance path and realized costs.
    Simulate(Flags),
    /// Analytic vs finite-difference comparative statics and sign audit.
    Statics(Flags),
    /// Value-iteration oracle checks; non-zero exit on any breach.
    Verify(Flags),
    /// Steady state along one primitive, optionally rendered to SVG.
    Sweep(Flags),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Rho,
    Delta,
    C,
    #[value(name = "sigma_sq", alias = "sigma-sq")]
    SigmaSq,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Rho => "rho",
            Axis::Delta => "delta",
            Axis::C => "c",
            Axis::SigmaSq => "sigma_sq",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
struct Flags {
    /// JSON file with default values for any flag below.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long = "sigma0-sq", allow_negative_numbers = true)]
    sigma0_sq: Option<f64>,
    #[arg(long = "sigma-sq", allow_negative_numbers = true)]
    sigma_sq: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of value-iteration grid points.
    #[arg(long)]
    grid: Option<usize>,
    /// Relative tolerance on the first-order-condition residual.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, value_enum)]
    axis: Option<Axis>,
    #[arg(long, allow_negative_numbers = true)]
    from: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    to: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Also render the sweep as SVG line charts.
    #[arg(long)]
    svg: Option<PathBuf>,
}

macro_rules! overlay {
    ($flags:ident, $file:ident, $($field:ident),*) => {
        Flags { config: $flags.config, $($field: $flags.$field.or($file.$field)),* }
    };
}

impl Flags {
    fn merged_with(self, file: Flags) -> Flags {
        overlay!(self, file, rho, sigma0_sq, sigma_sq, c, delta, horizon, paths, seed, grid, tol, axis, from, to, steps, out, format, svg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Trace,
    Simulate,
    Statics,
    Verify,
    Sweep,
}

impl Command {
    fn default_format(self) -> Format {
        match self {
            Command::Trace | Command::Simulate | Command::Sweep => Format::Csv,
            Command::Solve | Command::Statics | Command::Verify => Format::Json,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub horizon: usize,
    pub paths: usize,
    pub seed: u64,
    pub grid: usize,
    pub tol: f64,
    pub sweep: Option<SweepSpec>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub svg: Option<PathBuf>,
}

/// Everything one invocation needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: Params,
    pub options: Options,
}

#[derive(Debug)]
pub enum ParseOutcome {
    /// Syntax errors, `--help` and `--version`, rendered by clap.
    Clap(clap::Error),
    Invalid(CliError),
}

impl From<CliError> for ParseOutcome {
    fn from(e: CliError) -> Self {
        ParseOutcome::Invalid(e)
    }
}

fn read_config(path: &Path) -> Result<Flags, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("--config {}: {e}", path.display())))
}

fn required(v: Option<f64>, flag: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing required --{flag}")))
}

pub fn parse_cli<I, S>(argv: I) -> Result<RunConfig, ParseOutcome>
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(ParseOutcome::Clap)?;
    let (command, flags) = match cli.command {
        Sub::Solve(f) => (Command::Solve, f),
        Sub::Trace(f) => (Command::Trace, f),
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Statics(f) => (Command::Statics, f),
        Sub::Verify(f) => (Command::Verify, f),
        Sub::Sweep(f) => (Command::Sweep, f),
    };
    let flags = match &flags.config {
        Some(path) => {
            let file = read_config(path)?;
            flags.merged_with(file)
        }
        None => flags,
    };
    Ok(build(command, flags)?)
}

fn build(command: Command, f: Flags) -> Result<RunConfig, CliError> {
    let params = Params::new(
        required(f.rho, "rho")?,
        required(f.sigma0_sq, "sigma0-sq")?,
        required(f.sigma_sq, "sigma-sq")?,
        required(f.c, "c")?,
        required(f.delta, "delta")?,
    )
    .map_err(|e| match e {
        ModelError::InvalidParams(v) => CliError::Usage(format!(
            "invalid parameters: {}",
            v.iter().map(|b| b.to_string()).collect::<Vec<_>>().join("; ")
        )),
        other => CliError::Usage(other.to_string()),
    })?;

    let tol = f.tol.unwrap_or(infoacq::steady::DEFAULT_TOL);
    if !(tol > 0.0 && tol <= 1e-6) {
        return Err(CliError::Usage(format!("--tol must lie in (0, 1e-6], got {tol}")));
    }
    let horizon = f.horizon.unwrap_or(20);
    let paths = f.paths.unwrap_or(10_000);
    if horizon == 0 {
        return Err(CliError::Usage("--horizon must be >= 1".into()));
    }
    if paths == 0 {
        return Err(CliError::Usage("--paths must be >= 1".into()));
    }
    let grid = f.grid.unwrap_or(512);
    if grid < 64 {
        return Err(CliError::Usage(format!("--grid must be >= 64, got {grid}")));
    }

    let sweep = if command == Command::Sweep {
        let axis = f.axis.ok_or_else(|| CliError::Usage("sweep needs --axis".into()))?;
        let from = required(f.from, "from")?;
        let to = required(f.to, "to")?;
        let steps = f.steps.unwrap_or(200);
        if !(from < to) {
            return Err(CliError::Usage(format!("--from {from} must be below --to {to}")));
        }
        if steps < 2 {
            return Err(CliError::Usage(format!("--steps must be >= 2, got {steps}")));
        }
        Some(SweepSpec { axis, from, to, steps })
    } else {
        None
    };

    Ok(RunConfig {
        command,
        params,
        options: Options {
            horizon,
            paths,
            seed: f.seed.unwrap_or(1),
            grid,
            tol,
            sweep,
            out: f.out,
            format: f.format.unwrap_or(command.default_format()),
            svg: f.svg,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, ParseOutcome> {
        parse_cli(std::iter::once("infoacq").chain(args.iter().copied()))
    }

    const A: [&str; 10] = ["--rho", "0.5", "--sigma0-sq", "0", "--sigma-sq", "1", "--c", "1", "--delta", "0"];

    #[test]
    fn parses_solve() {
        let mut args = vec!["solve"];
        args.extend(A);
        let cfg = parse(&args).ok().unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.params, Params::new(0.5, 0.0, 1.0, 1.0, 0.0).unwrap());
        assert_eq!(cfg.options.format, Format::Json);
    }

    #[test]
    fn rejects_out_of_range_rho() {
        let args = ["solve", "--rho", "1.5", "--sigma0-sq", "0", "--sigma-sq", "1", "--c", "1", "--delta", "0"];
        match parse(&args) {
            Err(ParseOutcome::Invalid(e)) => {
                assert_eq!(e.exit_code(), 2);
                assert!(e.to_string().contains("rho"), "{e}");
            }
            _ => panic!("expected usage error"),
        }
    }

    #[test]
    fn rejects_unknown_flag() {
        let mut args = vec!["solve", "--bogus", "1"];
        args.extend(A);
        match parse(&args) {
            Err(ParseOutcome::Clap(e)) => assert_eq!(e.exit_code(), 2),
            _ => panic!("expected clap error"),
        }
    }

    #[test]
    fn missing_parameter_is_usage_error() {
        match parse(&["trace", "--rho", "0.5"]) {
            Err(ParseOutcome::Invalid(e)) => assert!(e.to_string().contains("sigma0-sq")),
            _ => panic!(),
        }
    }

    #[test]
    fn config_file_supplies_defaults_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("base.json");
        std::fs::write(
            &path,
            r#"{"rho":0.5,"sigma0_sq":0,"sigma_sq":1,"c":1,"delta":0,"horizon":7,"format":"json"}"#,
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let cfg = parse(&["trace", "--config", p, "--c", "4"]).ok().unwrap();
        assert_eq!(cfg.params.c(), 4.0);
        assert_eq!(cfg.params.rho(), 0.5);
        assert_eq!(cfg.options.horizon, 7);
        assert_eq!(cfg.options.format, Format::Json);

        std::fs::write(&path, r#"{"rho":0.5,"typo":1}"#).unwrap();
        assert!(matches!(parse(&["trace", "--config", p]), Err(ParseOutcome::Invalid(CliError::Usage(_)))));
    }

    #[test]
    fn sweep_range_checks() {
        let mut args = vec!["sweep", "--axis", "rho", "--from", "0.9", "--to", "0.1"];
        args.extend(A);
        assert!(matches!(parse(&args), Err(ParseOutcome::Invalid(CliError::Usage(_)))));
        let mut args = vec!["sweep", "--axis", "sigma_sq", "--from", "0.1", "--to", "0.9", "--steps", "1"];
        args.extend(A);
        assert!(matches!(parse(&args), Err(ParseOutcome::Invalid(CliError::Usage(_)))));
        let mut args = vec!["sweep", "--axis", "c", "--from", "0.1", "--to", "0.9"];
        args.extend(A);
        let cfg = parse(&args).ok().unwrap();
        assert_eq!(cfg.options.sweep.unwrap().steps, 200);
    }
}
